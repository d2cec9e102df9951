#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <sys/wait.h>

#include "sublab/field_io.hpp"
#include "sublab/grid.hpp"

using namespace sublab;

namespace {

const std::filesystem::path kDir = std::filesystem::temp_directory_path() / "sublab_test_cli";

int run(const std::string& args) {
  const std::string cmd = std::string(SUBLAB_CLI) + " " + args + " > " + (kDir / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string at(const char* name) { return (kDir / name).string(); }

}  // namespace

TEST_CASE("cli exit codes") {
  std::filesystem::remove_all(kDir);
  std::filesystem::create_directories(kDir);

  CHECK(run("run " + std::string(SUBLAB_SOURCE_DIR) + "/scenarios/euclidean-identity --out " + at("out")) == 0);
  CHECK(std::filesystem::exists(kDir / "out" / "euclidean-identity.report.json"));

  CHECK(run("check-structure --operator infinity --phi power:3") == 0);
  CHECK(run("check-structure --operator infinity --phi power:1") == 1);

  const Grid g = Grid::cube(2, -1, 1, 11);
  const GridFunction u = GridFunction::sample(g, [](const Point& p) { return p[0]; });
  GridFunction v = u;
  v[g.index(std::vector<int>{4, 6})] -= 0.5;
  write_field(at("u.field"), u);
  write_field(at("v.field"), v);
  write_field(at("coarse.field"), GridFunction(Grid::cube(2, -1, 1, 5)));
  CHECK(run("compare " + at("u.field") + " " + at("u.field")) == 0);
  CHECK(run("compare " + at("u.field") + " " + at("v.field")) == 1);
  CHECK(run("compare " + at("u.field") + " " + at("coarse.field")) == 2);

  CHECK(run("solve --system euclidean:2 --operator sublaplacian --boundary 'x^2 - y^2' --grid 9 --out " +
            at("s.field") + " --history " + at("h.csv")) == 0);
  CHECK(std::filesystem::exists(kDir / "s.field"));
  CHECK(run("convolve " + at("s.field") + " --system euclidean:2 --epsilon 0.1 --kind sup --out " + at("c.field")) == 0);
  CHECK(run("distance --system heisenberg --point 0,0,0 --point 0,0,1") == 0);
  CHECK(run("probe nsw --system heisenberg") == 0);
  CHECK(run("probe chainrule --operator infinity --configs 20") == 0);

  CHECK(run("run " + at("missing-scenario")) == 2);
  CHECK(run("solve --operator nonsense") == 2);
  CHECK(run("solve --boundary 'x +'") == 2);
  CHECK(run("frobnicate") == 2);
  std::filesystem::remove_all(kDir);
}
