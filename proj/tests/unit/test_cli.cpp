#include <unistd.h>
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "rimle/cli.hpp"

namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("rimle_cli_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

int run_cli(const std::vector<std::string>& args, std::string* out_text = nullptr,
            std::string* err_text = nullptr) {
  std::ostringstream out;
  std::ostringstream err;
  const int status = rimle::cli::run(args, out, err);
  if (out_text) *out_text = out.str();
  if (err_text) *err_text = err.str();
  return status;
}

const char* kSpecJson = R"({
  "n": 120, "p": 2, "seed": 9, "noise_fraction": 0.1,
  "noise_box": [[-6, 14], [-6, 6]],
  "components": [
    {"weight": 0.45, "mean": [0, 0], "covariance": [[1, 0], [0, 1]]},
    {"weight": 0.45, "mean": [8, 0], "covariance": [[1, 0], [0, 1]]}
  ]
})";

}  // namespace

TEST_CASE("simulate then fit produces a full label file") {
  TempDir dir;
  write_file(dir.file("spec.json"), kSpecJson);

  CHECK(run_cli({"simulate", "--spec", dir.file("spec.json"), "--output",
                 dir.file("data.csv"), "--labels-output",
                 dir.file("truth.txt")}) == rimle::cli::kExitOk);

  std::string out;
  CHECK(run_cli({"fit", "--input", dir.file("data.csv"), "--g", "2",
                 "--log-delta", "-8", "--starts", "5", "--seed", "1",
                 "--output", dir.file("fit.json"), "--labels-output",
                 dir.file("labels.txt")},
                &out) == rimle::cli::kExitOk);
  CHECK(out.find("loglik=") != std::string::npos);

  int lines = 0;
  std::ifstream labels(dir.file("labels.txt"));
  std::string line;
  while (std::getline(labels, line)) ++lines;
  CHECK(lines == 120);

  SUBCASE("ari of a file against itself prints 1.0") {
    std::string ari_out;
    CHECK(run_cli({"ari", dir.file("labels.txt"), dir.file("labels.txt")},
                  &ari_out) == rimle::cli::kExitOk);
    CHECK(ari_out == "1.0\n");
  }
}

TEST_CASE("fixed seeds reproduce output files bitwise") {
  TempDir dir;
  write_file(dir.file("spec.json"), kSpecJson);
  REQUIRE(run_cli({"simulate", "--spec", dir.file("spec.json"), "--output",
                   dir.file("data.csv")}) == rimle::cli::kExitOk);

  const std::vector<std::string> scan_args = {
      "scan",   "--input", dir.file("data.csv"), "--g",    "2",
      "--grid", "-9,-5",   "--starts",           "3",      "--seed",
      "11",     "--output", ""};
  auto with_output = [&](const std::string& path) {
    std::vector<std::string> args = scan_args;
    args.back() = path;
    return args;
  };
  CHECK(run_cli(with_output(dir.file("scan1.csv"))) == rimle::cli::kExitOk);
  CHECK(run_cli(with_output(dir.file("scan2.csv"))) == rimle::cli::kExitOk);
  CHECK(read_file(dir.file("scan1.csv")) == read_file(dir.file("scan2.csv")));
  CHECK(read_file(dir.file("scan1.csv")).find("log_delta,") == 0);
}

TEST_CASE("scan without --grid sweeps the default grid reproducibly") {
  TempDir dir;
  write_file(dir.file("spec.json"), kSpecJson);
  REQUIRE(run_cli({"simulate", "--spec", dir.file("spec.json"), "--output",
                   dir.file("data.csv")}) == rimle::cli::kExitOk);
  for (const char* name : {"scan_a.csv", "scan_b.csv"}) {
    CHECK(run_cli({"scan", "--input", dir.file("data.csv"), "--g", "2",
                   "--starts", "2", "--seed", "8", "--output",
                   dir.file(name)}) == rimle::cli::kExitOk);
  }
  CHECK(read_file(dir.file("scan_a.csv")) == read_file(dir.file("scan_b.csv")));

  std::ifstream scan(dir.file("scan_a.csv"));
  std::string line;
  int lines = 0;
  bool saw_minus_200 = false;
  while (std::getline(scan, line)) {
    ++lines;
    if (line.rfind("-200,", 0) == 0) saw_minus_200 = true;
  }
  CHECK(lines == 22);  // header + 3 coarse + 18 integer grid points
  CHECK(saw_minus_200);
}

TEST_CASE("breakdown subcommand writes the report table") {
  TempDir dir;
  write_file(dir.file("spec.json"), kSpecJson);
  REQUIRE(run_cli({"simulate", "--spec", dir.file("spec.json"), "--output",
                   dir.file("data.csv")}) == rimle::cli::kExitOk);
  CHECK(run_cli({"breakdown", "--input", dir.file("data.csv"), "--g", "2",
                 "--log-delta", "-15", "--starts", "4", "--seed", "2", "--r",
                 "3", "--magnitudes", "1e4", "--output",
                 dir.file("report.csv")}) == rimle::cli::kExitOk);
  const std::string csv = read_file(dir.file("report.csv"));
  CHECK(csv.find("magnitude,r,") == 0);
  CHECK(csv.find("\n10000,3,") != std::string::npos);
}

TEST_CASE("fit can emit the labels-only format") {
  TempDir dir;
  write_file(dir.file("spec.json"), kSpecJson);
  REQUIRE(run_cli({"simulate", "--spec", dir.file("spec.json"), "--output",
                   dir.file("data.csv")}) == rimle::cli::kExitOk);
  CHECK(run_cli({"fit", "--input", dir.file("data.csv"), "--g", "2",
                 "--log-delta", "-8", "--starts", "3", "--seed", "1",
                 "--output", dir.file("labels.txt"), "--format", "labels"}) ==
        rimle::cli::kExitOk);
  std::ifstream labels(dir.file("labels.txt"));
  std::string line;
  int lines = 0;
  while (std::getline(labels, line)) ++lines;
  CHECK(lines == 120);
}

TEST_CASE("usage errors exit with the usage status") {
  SUBCASE("unknown flag") {
    std::string err;
    CHECK(run_cli({"fit", "--no-such-flag"}, nullptr, &err) ==
          rimle::cli::kExitUsage);
    CHECK_FALSE(err.empty());
  }
  SUBCASE("delta and log-delta are mutually exclusive") {
    TempDir dir;
    write_file(dir.file("data.csv"), "1,2\n3,4\n");
    CHECK(run_cli({"fit", "--input", dir.file("data.csv"), "--g", "1",
                   "--delta", "0.1", "--log-delta", "-3"}) ==
          rimle::cli::kExitUsage);
  }
  SUBCASE("missing subcommand") {
    CHECK(run_cli({}) == rimle::cli::kExitUsage);
  }
}

TEST_CASE("runtime failures name the failing stage") {
  std::string err;
  CHECK(run_cli({"fit", "--input", "/no/such/file.csv", "--g", "2"}, nullptr,
                &err) == rimle::cli::kExitRuntime);
  CHECK(err.find("read:") == 0);

  TempDir dir;
  write_file(dir.file("tiny.csv"), "1,1\n1,1\n1,1\n");
  err.clear();
  // Three copies of one point cannot support two components.
  CHECK(run_cli({"fit", "--input", dir.file("tiny.csv"), "--g", "2",
                 "--log-delta", "-5"},
                nullptr, &err) == rimle::cli::kExitRuntime);
  CHECK(err.find("fit:") == 0);
}