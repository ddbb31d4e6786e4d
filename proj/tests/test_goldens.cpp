#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "preg/cli.hpp"

using namespace preg;
namespace fs = std::filesystem;

namespace {

// Recursive numeric comparison with a per-check tolerance; exact for
// strings, booleans and integers.
bool close(const report::json& got, const report::json& want, double tol, std::string& why) {
  if (want.is_number() && got.is_number()) {
    double a = got.get<double>();
    double b = want.get<double>();
    if (std::abs(a - b) <= tol) return true;
    why = "expected " + std::to_string(b) + ", got " + std::to_string(a);
    return false;
  }
  if (want.is_array()) {
    if (!got.is_array() || got.size() != want.size()) {
      why = "array shape mismatch";
      return false;
    }
    for (std::size_t i = 0; i < want.size(); ++i)
      if (!close(got[i], want[i], tol, why)) {
        why = "[" + std::to_string(i) + "] " + why;
        return false;
      }
    return true;
  }
  if (got == want) return true;
  why = "expected " + want.dump() + ", got " + got.dump();
  return false;
}

void run_golden_file(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  report::json doc = report::json::parse(in);
  INFO("golden case: ", doc["name"].get<std::string>());

  std::vector<std::string> args;
  for (const auto& a : doc["args"]) args.push_back(a.get<std::string>());
  auto res = cli::run(args);

  if (doc.contains("expect_exit")) CHECK(res.exit_code == doc["expect_exit"].get<int>());

  for (const auto& check : doc["checks"]) {
    std::string ptr = check["path"].get<std::string>();
    INFO("check path: ", ptr, " [", check.value("provenance", "?"), "]");
    report::json::json_pointer jp(ptr);
    REQUIRE(res.report.contains(jp));
    const auto& got = res.report[jp];
    if (check.contains("value")) {
      double tol = check.value("tol", 0.0);
      std::string why;
      bool ok = close(got, check["value"], tol, why);
      INFO("mismatch: ", why);
      CHECK(ok);
    }
    if (check.contains("max")) CHECK(got.get<double>() <= check["max"].get<double>());
    if (check.contains("min")) CHECK(got.get<double>() >= check["min"].get<double>());
  }
}

}  // namespace

TEST_CASE("golden corpus regenerates from configuration") {
  int cases = 0;
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(GOLDEN_DIR))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    run_golden_file(f);
    ++cases;
  }
  CHECK(cases >= 12);
}
