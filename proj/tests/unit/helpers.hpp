#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "rimle/em.hpp"
#include "rimle/evaluation.hpp"
#include "rimle/rng.hpp"
#include "rimle/types.hpp"

namespace rimle::testing {

inline ComponentParams identity_component(Eigen::VectorXd mean) {
  const Eigen::Index p = mean.size();
  return ComponentParams::from_covariance(
      std::move(mean), Eigen::MatrixXd::Identity(p, p));
}

inline MixtureParams single_gaussian(Eigen::VectorXd mean,
                                     Eigen::MatrixXd covariance,
                                     double noise_weight = 0.0) {
  Eigen::VectorXd weights(1);
  weights << 1.0 - noise_weight;
  std::vector<ComponentParams> components;
  components.push_back(
      ComponentParams::from_covariance(std::move(mean), covariance));
  return MixtureParams(noise_weight, std::move(weights),
                       std::move(components));
}

/// Random orthogonal matrix via QR of a Gaussian draw.
inline Eigen::MatrixXd random_orthogonal(Rng& rng, Eigen::Index p) {
  Eigen::MatrixXd raw(p, p);
  for (Eigen::Index i = 0; i < p; ++i) {
    for (Eigen::Index j = 0; j < p; ++j) raw(i, j) = rng.normal();
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(raw);
  Eigen::MatrixXd q = qr.householderQ();
  return q;
}

/// Random SPD matrix with eigenvalues log-uniform in [lo, hi].
inline Eigen::MatrixXd random_spd(Rng& rng, Eigen::Index p, double lo,
                                  double hi) {
  const Eigen::MatrixXd q = random_orthogonal(rng, p);
  Eigen::VectorXd eigenvalues(p);
  for (Eigen::Index k = 0; k < p; ++k) {
    eigenvalues(k) =
        std::exp(rng.uniform(std::log(lo), std::log(hi)));
  }
  Eigen::MatrixXd spd = q * eigenvalues.asDiagonal() * q.transpose();
  return 0.5 * (spd + spd.transpose());
}

inline Eigen::VectorXd random_vector(Rng& rng, Eigen::Index p, double scale) {
  Eigen::VectorXd v(p);
  for (Eigen::Index k = 0; k < p; ++k) v(k) = scale * rng.normal();
  return v;
}

/// Random mixture with weights summing to one.
inline MixtureParams random_mixture(Rng& rng, Eigen::Index g, Eigen::Index p,
                                    double noise_weight) {
  Eigen::VectorXd weights(g);
  for (Eigen::Index j = 0; j < g; ++j) weights(j) = 0.2 + rng.uniform();
  weights *= (1.0 - noise_weight) / weights.sum();
  std::vector<ComponentParams> components;
  for (Eigen::Index j = 0; j < g; ++j) {
    components.push_back(ComponentParams::from_covariance(
        random_vector(rng, p, 3.0), random_spd(rng, p, 0.3, 4.0)));
  }
  return MixtureParams(noise_weight, std::move(weights),
                       std::move(components));
}

/// Two well separated unit clusters on the x axis plus optional box noise.
inline SyntheticSpec two_cluster_spec(Eigen::Index n, double separation,
                                      double noise_fraction,
                                      std::uint64_t seed,
                                      double cluster_sd = 1.0) {
  SyntheticSpec spec;
  spec.n = n;
  spec.p = 2;
  spec.seed = seed;
  spec.noise_fraction = noise_fraction;
  const double w = (1.0 - noise_fraction) / 2.0;
  const Eigen::MatrixXd cov =
      cluster_sd * cluster_sd * Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd m1(2), m2(2);
  m1 << 0.0, 0.0;
  m2 << separation, 0.0;
  spec.components.push_back({w, m1, cov});
  spec.components.push_back({w, m2, cov});
  if (noise_fraction > 0.0) {
    spec.noise_box = {{-6.0, separation + 6.0}, {-6.0, 6.0}};
  }
  return spec;
}

inline MixtureParams permuted_components(const MixtureParams& theta,
                                         const std::vector<int>& order) {
  Eigen::VectorXd weights(theta.weights().size());
  std::vector<ComponentParams> components;
  for (std::size_t j = 0; j < order.size(); ++j) {
    weights(static_cast<Eigen::Index>(j)) =
        theta.weights()(order[j]);
    components.push_back(
        theta.components()[static_cast<std::size_t>(order[j])]);
  }
  return MixtureParams(theta.noise_weight(), std::move(weights),
                       std::move(components));
}

}  // namespace rimle::testing
