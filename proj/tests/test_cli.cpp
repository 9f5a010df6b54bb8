// End-to-end tests of the command-line binary: exit codes, artifact layout,
// determinism of the written bytes, and a golden spectrum.

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::current_path() / "cli_scratch" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run_cli(const std::string& args, const fs::path& log_dir) {
  const std::string cmd = std::string(ULTRADIFF_BIN) + " " + args + " > \"" + (log_dir / "stdout.txt").string() +
                          "\" 2> \"" + (log_dir / "stderr.txt").string() + "\"";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::istringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string data_file(const char* name) { return (fs::path(ULTRADIFF_TEST_DATA) / name).string(); }

}  // namespace

TEST_CASE("zeta writes byte-identical artifacts across output directories") {
  const fs::path a = scratch_dir("zeta_a");
  const fs::path b = scratch_dir("zeta_b");
  REQUIRE(run_cli("zeta --depth 4 --out \"" + a.string() + "\"", a) == 0);
  REQUIRE(run_cli("zeta --depth 4 --out \"" + b.string() + "\"", b) == 0);

  const std::string csv_a = slurp(a / "zeta.csv");
  CHECK(csv_a.rfind("level,term,cumulative\n", 0) == 0);
  CHECK(csv_a == slurp(b / "zeta.csv"));
  CHECK(slurp(a / "zeta.json") == slurp(b / "zeta.json"));
  CHECK(slurp(a / "manifest.json") == slurp(b / "manifest.json"));

  const nlohmann::json manifest = nlohmann::json::parse(slurp(a / "manifest.json"));
  CHECK(manifest.at("command") == "zeta");
  CHECK(manifest.at("outputs").size() == 2);
  const nlohmann::json z = nlohmann::json::parse(slurp(a / "zeta.json"));
  CHECK(z.at("abscissa").at("status") == "resolved");
  CHECK_THAT(z.at("abscissa").at("s0").get<double>(), Catch::Matchers::WithinAbs(1.0, 1e-3));
}

TEST_CASE("unknown configuration keys are rejected with a report") {
  const fs::path dir = scratch_dir("bad_key");
  const int code = run_cli("zeta --config \"" + data_file("bad_key_config.json") + "\" --out \"" + dir.string() + "\"", dir);
  CHECK(code == 2);
  const nlohmann::json report = nlohmann::json::parse(slurp(dir / "report.json"));
  CHECK(report.at("status") == "validation_error");
  CHECK(report.at("exit_code") == 2);
  CHECK(report.at("message").get<std::string>().find("spectral_gap_target") != std::string::npos);
  CHECK(!fs::exists(dir / "zeta.csv"));
}

TEST_CASE("invalid depth is rejected") {
  const fs::path dir = scratch_dir("depth0");
  CHECK(run_cli("zeta --depth 0 --out \"" + dir.string() + "\"", dir) == 2);
}

TEST_CASE("check runs the configured suites and reports success") {
  const fs::path dir = scratch_dir("check_smoke");
  const int code =
      run_cli("check --config \"" + data_file("smoke_config.json") + "\" --out \"" + dir.string() + "\"", dir);
  CHECK(code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "check.json"));
  CHECK(j.at("all_passed") == true);
  CHECK(j.at("suites").size() == 8);
  const std::string out = slurp(dir / "stdout.txt");
  CHECK(out.find("[PASS] tree:") != std::string::npos);
  CHECK(out.find("[FAIL]") == std::string::npos);
}

TEST_CASE("spectrum emits the closed-form eigenvalues with a tight oracle") {
  const fs::path dir = scratch_dir("spectrum_golden");
  REQUIRE(run_cli("spectrum --depth 2 --out \"" + dir.string() + "\"", dir) == 0);
  const auto rows = parse_csv(slurp(dir / "spectrum.csv"));
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"support_address", "level", "multiplicity", "lambda_closed_form",
                                            "lambda_dense_oracle", "abs_diff"});
  CHECK(rows[1][0] == "(constant)");
  CHECK(rows[1][1] == "-1");
  std::vector<double> lambdas;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    REQUIRE(rows[i].size() == 6);
    lambdas.push_back(std::stod(rows[i][3]));
    CHECK(std::stod(rows[i][5]) < 1e-12);  // dense oracle agrees
  }
  std::sort(lambdas.begin(), lambdas.end());
  CHECK(lambdas == std::vector<double>{0.0, 2.0, 3.0, 3.0});
}

TEST_CASE("simulate accounts for every path and matches the analytic row") {
  const fs::path dir = scratch_dir("simulate_smoke");
  const int code =
      run_cli("simulate --config \"" + data_file("smoke_config.json") + "\" --out \"" + dir.string() + "\"", dir);
  REQUIRE(code == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(dir / "simulate.json"));
  CHECK(j.at("paths") == 200);
  CHECK(j.at("seed") == 20260815);
  std::uint64_t total = 0;
  for (const auto& pair : j.at("counts")) total += pair.at(1).get<std::uint64_t>();
  CHECK(total == 200);
  CHECK(j.at("tv_distance").get<double>() < 0.5);
  CHECK(j.at("analytic_row").size() == 8);
}

TEST_CASE("acceptance criteria surface through the exit code") {
  const fs::path pass_dir = scratch_dir("acceptance_pass");
  CHECK(run_cli("check --criterion 7 --out \"" + pass_dir.string() + "\"", pass_dir) == 0);
  const nlohmann::json j = nlohmann::json::parse(slurp(pass_dir / "acceptance.json"));
  CHECK(j.at("criteria").size() == 1);
  CHECK(j.at("all_passed") == true);

  const fs::path fail_dir = scratch_dir("acceptance_fail");
  CHECK(run_cli("check --criterion 3 --out \"" + fail_dir.string() + "\"", fail_dir) == 3);
  const std::string out = slurp(fail_dir / "stdout.txt");
  CHECK(out.find("[FAIL] criterion 3") != std::string::npos);
}

TEST_CASE("a run can be reproduced from its own resolved configuration") {
  const fs::path first = scratch_dir("replay_first");
  REQUIRE(run_cli("measure --depth 3 --family level_regular:2,3 --out \"" + first.string() + "\"", first) == 0);
  const nlohmann::json manifest = nlohmann::json::parse(slurp(first / "manifest.json"));

  const fs::path replay = scratch_dir("replay_second");
  const fs::path cfg_path = replay / "resolved.json";
  {
    std::ofstream out(cfg_path);
    out << manifest.at("config").dump(2) << "\n";
  }
  REQUIRE(run_cli("measure --config \"" + cfg_path.string() + "\" --out \"" + replay.string() + "\"", replay) == 0);
  CHECK(slurp(first / "measure.csv") == slurp(replay / "measure.csv"));
  CHECK(slurp(first / "measure.json") == slurp(replay / "measure.json"));
  CHECK(slurp(first / "manifest.json") == slurp(replay / "manifest.json"));
}
