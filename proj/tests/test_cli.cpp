#include <gtest/gtest.h>

#include <cstdio>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "wgabs/io.hpp"

using namespace wgabs;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(WGABS_CLI) + " " + args + " 2>/dev/null";
  Run r;
  FILE* p = popen(cmd.c_str(), "r");
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string config(const std::string& name) { return std::string(WGABS_CONFIG_DIR) + "/" + name + ".json"; }

std::vector<std::vector<double>> csv_rows(const std::string& text) {
  std::vector<std::vector<double>> rows;
  std::istringstream is(text);
  std::string line;
  bool header = true;
  while (std::getline(is, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (header) {
      header = false;
      continue;
    }
    std::vector<double> row;
    std::istringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    rows.push_back(row);
  }
  return rows;
}

} // namespace

TEST(Cli, StraightGuideReflectsOne) {
  auto r = run("smatrix --lambda-over-pi 0.8 --eta 0 --mesh-h 0.05 --config " + config("straight"));
  ASSERT_EQ(r.code, 0);
  const auto j = json::parse(r.out);
  const auto S = matrix_from_json(j["S"]);
  EXPECT_NEAR(std::abs(S(0, 0) - 1.0), 0.0, 1e-4);
  EXPECT_EQ(j["provenance"]["version"], version);
}

TEST(Cli, SweepRowsIncreaseAndRepeatExactly) {
  const std::string args = "sweep --config " + config("disk") + " --mesh-h 0.05 --etas 0.1 1 10";
  auto a = run(args);
  ASSERT_EQ(a.code, 0);
  auto rows = csv_rows(a.out);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_GT(rows[i][0], rows[i - 1][0]);
  auto b = run(args + " --workers 2");
  EXPECT_EQ(csv_rows(a.out), csv_rows(b.out));
  auto c = run(args);
  EXPECT_EQ(a.out.substr(a.out.find("eta,")), c.out.substr(c.out.find("eta,")));
}

TEST(Cli, OracleSlabMatchesGolden) {
  auto r = run("oracle slab --lambda-over-pi 0.8 --eta 5 --samples 3");
  ASSERT_EQ(r.code, 0);
  const auto pos = r.out.find("# R: ");
  ASSERT_NE(pos, std::string::npos);
  double re = 0, im = 0;
  std::sscanf(r.out.c_str() + pos, "# R: %lf,%lf", &re, &im);
  EXPECT_NEAR(std::abs(cplx(re, im) - cplx(0.5209766098247034, -0.010113971147836263)), 0.0, 1e-12);
  EXPECT_EQ(csv_rows(r.out).size(), 3u);
}

TEST(Cli, ModesTable) {
  auto r = run("modes --lambda-over-pi 4.8");
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("# J = 5"), std::string::npos);
  auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 15u);
  EXPECT_EQ(rows[4][4], 1.0);
  EXPECT_EQ(rows[5][4], 0.0);
}

TEST(Cli, ExitCodes) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("smatrix").code, 1);                                    // no lambda
  EXPECT_EQ(run("smatrix --config /nonexistent.json").code, 1);         // missing file
  EXPECT_EQ(run("sweep --lambda 1 --etas 1 0.5").code, 1);              // unordered grid
  EXPECT_EQ(run("smatrix --lambda 9.869604401089358").code, 1);         // threshold pi^2
  EXPECT_EQ(run("smatrix --lambda-over-pi 0.8 --mesh-h 0.05 --eta 1 --energy-tol 0 --config " + config("disk")).code,
            4);
  EXPECT_EQ(run("asym-large --lambda-over-pi 0.8 --config " + config("rectangle")).code, 1);
}

TEST(Cli, SolveWritesDumps) {
  const std::string prefix = testing::TempDir() + "cli_solve";
  auto r = run("solve --config " + config("disk") + " --mesh-h 0.1 --eta 1 --field-prefix " + prefix);
  ASSERT_EQ(r.code, 0);
  std::ifstream f(prefix + "_0.field");
  ASSERT_TRUE(static_cast<bool>(f));
  auto dump = read_field(f);
  EXPECT_GT(dump.values.size(), 0);
  auto m = read_mesh_file(prefix + ".mesh");
  EXPECT_EQ(m.num_triangles(), dump.mesh.num_triangles());
}

TEST(Cli, HalfGuideAndAbsorberOutputs) {
  auto h = run("halfguide --lambda-over-pi 0.8 --mesh-h 0.05 --L 1.5 2.0");
  ASSERT_EQ(h.code, 0);
  auto rows = csv_rows(h.out);
  ASSERT_EQ(rows.size(), 2u);
  for (const auto& row : rows) EXPECT_NEAR(row[3], -1.0, 1e-3);

  const std::string csv = testing::TempDir() + "cli_absorber.csv";
  auto a = run("absorber design --config " + config("disk") + " --mesh-h 0.05 --eta 10 --L-min 1.05 --L-max 2.3 --L-points 6 --csv " + csv);
  ASSERT_EQ(a.code, 0);
  const auto j = json::parse(a.out);
  EXPECT_EQ(j["samples"].size(), 6u);
  EXPECT_GE(j["kappa"].get<int>(), 0);
  std::ifstream f(csv);
  std::stringstream ss;
  ss << f.rdbuf();
  EXPECT_EQ(csv_rows(ss.str()).size(), 6u);
}
