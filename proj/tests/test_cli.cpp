#define DOCTEST_CONFIG_IMPLEMENT
#include "doctest.h"

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

std::string g_bin;

int run(const std::string& args) {
  std::string cmd = g_bin + " " + args + " 2>/dev/null";
  int ret = std::system(cmd.c_str());
  return WIFEXITED(ret) ? WEXITSTATUS(ret) : -1;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// data rows as cell vectors, header skipped
std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(path);
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

const std::vector<std::string>* find_row(const std::vector<std::vector<std::string>>& rows,
                                         const std::string& first) {
  for (const auto& r : rows)
    if (!r.empty() && r[0] == first) return &r;
  return nullptr;
}

std::string fresh_dir(const std::string& name) {
  std::string dir = "cli_work_" + name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_schema(const std::string& path) {
  std::ofstream out(path);
  out << R"({"case_id":"case_id","z":"z","d":"d","outcomes":{"y":"y"},)"
      << R"("covariates":["x1","x2"],"attribute":"attribute",)"
      << R"("hearing_order":"hearing_order"})";
}

}  // namespace

TEST_CASE("unadjusted contrasts on the built-in dataset match hand totals") {
  std::string dir = fresh_dir("itt");
  REQUIRE(run("--out " + dir + " itt --input builtin:reference --k 2") == 0);
  auto rows = read_csv(dir + "/itt.csv");
  const auto* fta = find_row(rows, "fta");
  const auto* nvca = find_row(rows, "nvca");
  REQUIRE(fta != nullptr);
  REQUIRE(nvca != nullptr);
  // fta: 282/948 - 276/943; nvca: 60/948 - 49/943
  CHECK(std::stod((*fta)[1]) == doctest::Approx(282.0 / 948 - 276.0 / 943).epsilon(1e-9));
  CHECK(std::stod((*nvca)[1]) == doctest::Approx(60.0 / 948 - 49.0 / 943).epsilon(1e-9));
  CHECK((*fta)[4] == "948");
  CHECK((*fta)[5] == "943");
  CHECK(slurp(dir + "/manifest.json").find("\"itt\"") != std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("simulate, ingest, and weighted estimation chain together") {
  std::string dir = fresh_dir("pipe");
  REQUIRE(run("--out " + dir +
              " simulate --n 1200 --p 2 --k 1 --beta 0.5,0.4,-0.3,0,0 --alpha 0.5,0.4"
              " --theta 0.4,0.4 --delta -0.5,0.8 --seed 11") == 0);
  REQUIRE(fs::exists(dir + "/dataset.csv"));
  REQUIRE(fs::exists(dir + "/oracle.csv"));
  write_schema(dir + "/schema.json");

  std::string dir2 = fresh_dir("pipe2");
  REQUIRE(run("--out " + dir2 + " ingest --input " + dir + "/dataset.csv --schema " + dir +
              "/schema.json --k 1") == 0);
  CHECK(slurp(dir2 + "/dataset.csv") == slurp(dir + "/dataset.csv"));

  REQUIRE(run("--out " + dir2 + " apce-hajek --input " + dir + "/dataset.csv --schema " + dir +
              "/schema.json --k 1 --outcome y --bootstrap 200 --seed 3") == 0);
  auto rows = read_csv(dir2 + "/apce.csv");
  REQUIRE(rows.size() == 2);  // k=1: one preventable stratum plus the safe one
  for (const auto& cells : rows) {
    double est = std::stod(cells[4]);
    CHECK(std::stod(cells[5]) <= est);
    CHECK(est <= std::stod(cells[6]));
  }
  fs::remove_all(dir);
  fs::remove_all(dir2);
}

TEST_CASE("posterior sampling reruns are byte identical") {
  std::string dir = fresh_dir("gibbs");
  REQUIRE(run("--out " + dir +
              " simulate --n 250 --p 1 --k 1 --beta 0.5,0.4,0 --alpha 0.6"
              " --theta 0.3,0.3 --delta -0.4,0.7 --seed 21") == 0);
  std::ofstream(dir + "/schema.json")
      << R"({"case_id":"case_id","z":"z","d":"d","outcomes":{"y":"y"},"covariates":["x1"]})";
  std::string common = " gibbs --input " + dir + "/dataset.csv --schema " + dir +
                       "/schema.json --k 1 --outcome y --chains 2 --iters 300 --seed 7"
                       " --threads 2";
  std::string a = fresh_dir("gibbs_a"), b = fresh_dir("gibbs_b");
  REQUIRE(run("--out " + a + common) == 0);
  REQUIRE(run("--out " + b + common) == 0);
  std::string draws = slurp(a + "/draws.json");
  CHECK(draws == slurp(b + "/draws.json"));
  CHECK(!draws.empty());
  REQUIRE(fs::exists(a + "/rhat.csv"));

  std::string c = fresh_dir("gibbs_c");
  REQUIRE(run("--out " + c + " apce-bayes --input " + dir + "/dataset.csv --schema " + dir +
              "/schema.json --k 1 --outcome y --draws " + a + "/draws.json") == 0);
  auto rows = read_csv(c + "/apce.csv");
  // every stratum/decision cell plus the overall per-stratum contrasts
  CHECK(rows.size() == 8);
  for (const auto& p : {dir, a, b, c}) fs::remove_all(p);
}

TEST_CASE("invalid invocations exit with the validation code") {
  std::string dir = fresh_dir("err");
  CHECK(run("--out " + dir) == 2);  // a subcommand is required
  CHECK(run("--out " + dir + " itt --input missing_file.csv --schema also_missing.json") == 2);
  CHECK(run("--out " + dir + " bounds --input builtin:reference --k 2") == 2);  // no outcome
  // hearing orders are required for the randomization test
  REQUIRE(run("--out " + dir +
              " simulate --n 300 --p 1 --k 1 --beta 0.3,0.2,0 --seed 5") == 0);
  std::ofstream(dir + "/schema1.json")
      << R"({"case_id":"case_id","z":"z","d":"d","outcomes":{"y":"y"},"covariates":["x1"]})";
  CHECK(run("--out " + dir + " crt --input " + dir + "/dataset.csv --schema " + dir +
            "/schema1.json --k 1 --s 200 --seed 4") == 2);
  fs::remove_all(dir);
}

TEST_CASE("spillover test runs end to end on dated synthetic data") {
  std::string dir = fresh_dir("crt");
  REQUIRE(run("--out " + dir +
              " simulate --n 600 --p 1 --k 1 --beta 0.4,0.3,0 --alpha 0.5"
              " --hearing-dates 40 --seed 17") == 0);
  std::ofstream(dir + "/schema.json")
      << R"({"case_id":"case_id","z":"z","d":"d","outcomes":{"y":"y"},)"
      << R"("covariates":["x1"],"hearing_order":"hearing_order"})";
  REQUIRE(run("--out " + dir + " crt --input " + dir + "/dataset.csv --schema " + dir +
              "/schema.json --k 1 --s 200 --seed 4 --threads 2") == 0);
  std::string j = slurp(dir + "/crt.json");
  CHECK(j.find("p_value") != std::string::npos);
  std::ifstream nulls(dir + "/crt_null.csv");
  std::string line;
  int lines = 0;
  while (std::getline(nulls, line)) ++lines;
  CHECK(lines == 201);  // header plus one statistic per replicate
  fs::remove_all(dir);
}

int main(int argc, char** argv) {
  if (argc < 2) {
    std::fprintf(stderr, "usage: test_cli <path-to-cli-binary>\n");
    return 1;
  }
  g_bin = argv[1];
  doctest::Context ctx;
  ctx.applyCommandLine(1, argv);
  return ctx.run();
}
