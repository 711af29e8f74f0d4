#include <doctest.h>

#include <Eigen/Dense>
#include <sstream>

#include "helpers.hpp"
#include "rimle/data_io.hpp"
#include "rimle/evaluation.hpp"
#include "rimle/model.hpp"

using namespace rimle;
using rimle::testing::two_cluster_spec;

TEST_CASE("read_matrix parses delimited numbers") {
  SUBCASE("plain two by two") {
    std::istringstream in("1,2\n3,4\n");
    const DataMatrix data = read_matrix(in);
    CHECK(data.n() == 2);
    CHECK(data.p() == 2);
    CHECK(data.values()(0, 0) == 1.0);
    CHECK(data.values()(1, 1) == 4.0);
  }
  SUBCASE("header is skipped") {
    std::istringstream in("x,y\n1,2\n3,4\n");
    const DataMatrix data = read_matrix(in, true);
    CHECK(data.n() == 2);
    CHECK(data.values()(0, 1) == 2.0);
  }
  SUBCASE("alternative delimiter") {
    std::istringstream in("1;2\n3;4\n");
    const DataMatrix data = read_matrix(in, false, ';');
    CHECK(data.values()(1, 0) == 3.0);
  }
  SUBCASE("signs, exponents, and surrounding blanks") {
    std::istringstream in(" +1.5 ,-2e-3\n.5,-.25\n");
    const DataMatrix data = read_matrix(in);
    CHECK(data.values()(0, 0) == 1.5);
    CHECK(data.values()(0, 1) == -2e-3);
    CHECK(data.values()(1, 0) == 0.5);
    CHECK(data.values()(1, 1) == -0.25);
  }
  SUBCASE("ragged rows name the offender") {
    std::istringstream in("1,2\n3\n");
    try {
      read_matrix(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(std::string(e.what()).find("row 2") != std::string::npos);
    }
  }
  SUBCASE("non-numeric cells carry coordinates") {
    std::istringstream in("1,2\n3,oops\n");
    try {
      read_matrix(in);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.row() == 2);
      CHECK(e.column() == 2);
    }
  }
  SUBCASE("non-finite cells are rejected") {
    std::istringstream in("1,2\nnan,4\n");
    CHECK_THROWS_AS(read_matrix(in), ParseError);
  }
  SUBCASE("empty input") {
    std::istringstream in("");
    CHECK_THROWS_AS(read_matrix(in), InputError);
  }
}

TEST_CASE("matrix write/read round trip is exact") {
  Rng rng(19);
  Eigen::MatrixXd values(12, 3);
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    for (Eigen::Index k = 0; k < values.cols(); ++k) {
      values(i, k) = rng.normal() * std::exp(rng.uniform(-8.0, 8.0));
    }
  }
  std::ostringstream out;
  write_matrix(values, out);
  std::istringstream in(out.str());
  const DataMatrix back = read_matrix(in);
  CHECK(back.values() == values);
}

TEST_CASE("mad_standardize divides by the column MAD") {
  SUBCASE("MAD one is untouched") {
    Eigen::MatrixXd values(3, 1);
    values << -1, 0, 1;
    const DataMatrix out = mad_standardize(DataMatrix{values});
    CHECK(out.values() == values);
    CHECK((*out.column_scales())(0) == 1.0);
  }
  SUBCASE("MAD two halves the column") {
    Eigen::MatrixXd values(3, 1);
    values << -2, 0, 2;
    const DataMatrix out = mad_standardize(DataMatrix{values});
    CHECK(out.values()(0, 0) == -1.0);
    CHECK(out.values()(2, 0) == 1.0);
    CHECK((*out.column_scales())(0) == 2.0);
  }
  SUBCASE("even counts use the midpoint median") {
    Eigen::MatrixXd values(4, 1);
    values << 1, 2, 3, 4;  // median 2.5, absolute deviations 1.5,.5,.5,1.5
    const DataMatrix out = mad_standardize(DataMatrix{values});
    CHECK((*out.column_scales())(0) == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("constant columns are rejected by name") {
    Eigen::MatrixXd values(3, 2);
    values << 1, 5, 2, 5, 3, 5;
    try {
      mad_standardize(DataMatrix{values});
      FAIL("expected an input error");
    } catch (const InputError& e) {
      CHECK(std::string(e.what()).find("column 2") != std::string::npos);
    }
  }
  SUBCASE("idempotent and scale equivariant") {
    Rng rng(8);
    Eigen::MatrixXd values(40, 2);
    for (Eigen::Index i = 0; i < 40; ++i) {
      values(i, 0) = rng.normal() * 3.0 + 1.0;
      values(i, 1) = rng.normal() * 0.2 - 5.0;
    }
    const DataMatrix once = mad_standardize(DataMatrix{values});
    const DataMatrix twice = mad_standardize(once);
    CHECK((twice.values() - once.values()).cwiseAbs().maxCoeff() <= 1e-12);

    Eigen::MatrixXd scaled = values;
    scaled.col(0) *= 7.5;
    const DataMatrix from_scaled = mad_standardize(DataMatrix{scaled});
    CHECK((from_scaled.values() - once.values()).cwiseAbs().maxCoeff() <=
          1e-12);
    // The recorded factors compose across repeated standardization.
    CHECK((*twice.column_scales())(0) ==
          doctest::Approx((*once.column_scales())(0)).epsilon(1e-12));
  }
}

TEST_CASE("structured results round trip losslessly") {
  const SyntheticSpec spec = two_cluster_spec(80, 9.0, 0.1, 44);
  const auto [raw, labels] = generate_mixture(spec);
  const DataMatrix data = mad_standardize(raw);
  EmConfig cfg;
  cfg.n_components = 2;
  cfg.icd = IcdValue::from_log(-8.0);
  cfg.n_starts = 4;
  cfg.seed = 2;
  const MultistartResult fitted = multistart_fit(data, cfg);

  std::ostringstream out;
  write_result(fitted.best, cfg, data.column_scales(), out,
               ResultFormat::structured);
  std::istringstream in(out.str());
  const ResultDocument doc = read_result(in);

  CHECK(doc.config.n_components == 2);
  CHECK(doc.config.icd.log_delta() == -8.0);
  CHECK(doc.config.seed == 2);
  CHECK(doc.loglik == fitted.best.loglik);
  CHECK(doc.converged == fitted.best.converged);
  CHECK(doc.assignments == fitted.best.assignments);
  CHECK(doc.theta.noise_weight() ==
        doctest::Approx(fitted.best.theta.noise_weight()).epsilon(1e-15));
  for (int j = 0; j < 2; ++j) {
    const auto& original = fitted.best.theta.components()[j];
    const auto& restored = doc.theta.components()[j];
    CHECK((original.mean() - restored.mean()).cwiseAbs().maxCoeff() <=
          1e-15 * original.mean().cwiseAbs().maxCoeff());
    CHECK((original.covariance() - restored.covariance())
              .cwiseAbs()
              .maxCoeff() <= 1e-15);
  }
  REQUIRE(doc.column_scales.has_value());
  CHECK(*doc.column_scales == *data.column_scales());

  SUBCASE("zero delta survives the round trip") {
    EmConfig zero = cfg;
    zero.icd = IcdValue::zero();
    std::ostringstream zout;
    write_result(fitted.best, zero, {}, zout, ResultFormat::structured);
    std::istringstream zin(zout.str());
    const ResultDocument zdoc = read_result(zin);
    CHECK(zdoc.config.icd.delta() == 0.0);
    CHECK(std::isinf(zdoc.config.icd.log_delta()));
  }
}

TEST_CASE("labels-only output is one label per line") {
  const SyntheticSpec spec = two_cluster_spec(60, 9.0, 0.1, 5);
  const auto [data, labels] = generate_mixture(spec);
  EmConfig cfg;
  cfg.n_components = 2;
  cfg.icd = IcdValue::from_log(-7.0);
  cfg.n_starts = 3;
  const MultistartResult fitted = multistart_fit(data, cfg);

  std::ostringstream out;
  write_result(fitted.best, cfg, {}, out, ResultFormat::labels_only);
  std::istringstream in(out.str());
  const std::vector<int> parsed = read_labels(in);
  CHECK(parsed.size() == 60);
  CHECK(parsed == fitted.best.assignments);

  // The stored assignments are exactly what assign() recomputes.
  for (Eigen::Index i = 0; i < data.n(); ++i) {
    CHECK(parsed[static_cast<std::size_t>(i)] ==
          assign(data.row(i), fitted.best.theta, cfg.icd));
  }
}
