#include "lp/harness.hpp"
#include "lp/parallel.hpp"

#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace lp;
namespace fs = std::filesystem;

TEST_CASE("fit_rate recovers power laws") {
  const std::vector<long> n{128, 256, 512, 1024, 2048, 4096, 8192};
  std::vector<double> g;
  for (long v : n) g.push_back(3.0 / std::sqrt(double(v)));
  auto f = fit_rate(n, g);
  CHECK(f.slope == doctest::Approx(-0.5).epsilon(1e-9));
  CHECK(f.intercept == doctest::Approx(std::log(3.0)));
  CHECK(f.r2 == doctest::Approx(1));

  g.clear();
  for (long v : n) g.push_back(2 * std::sqrt(std::log(2.0 * double(v)) / double(v)));
  f = fit_rate(n, g);
  CHECK(f.slope > -0.5);
  CHECK(f.slope < -0.4);

  f = fit_rate(n, std::vector<double>(n.size(), 0.7));
  CHECK(f.slope == doctest::Approx(0).scale(1));
}

TEST_CASE("fit_rate drops nonpositive gaps and needs four points") {
  const std::vector<long> n{10, 20, 40, 80, 160};
  const auto f = fit_rate(n, {1.0, 0.0, 0.25, 0.125, 0.0625});
  CHECK(f.excluded == std::vector<long>{20});
  CHECK(f.grid.size() == 4);
  CHECK(f.slope == doctest::Approx(-1));
  CHECK_THROWS_AS(fit_rate(n, {1.0, 0.0, -1.0, 0.25, 0.125}), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate({1, 2, 3}, {1, 1, 1}), std::invalid_argument);
  CHECK_THROWS_AS(fit_rate({1, 2, 3, 4}, {1, 1, 1}), std::invalid_argument);
}

TEST_CASE("grid parsing") {
  CHECK(parse_grid("128..1024:geometric") == std::vector<long>{128, 256, 512, 1024});
  CHECK(parse_grid("128..1024") == std::vector<long>{128, 256, 512, 1024});
  CHECK(parse_grid("16..1024:geometricx4") == std::vector<long>{16, 64, 256, 1024});
  CHECK(parse_grid("5,7,9") == std::vector<long>{5, 7, 9});
  CHECK_THROWS_AS(parse_grid(""), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("0,4"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("64..8"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("8..64:linear"), std::invalid_argument);
  CHECK_THROWS_AS(parse_grid("8,x"), std::invalid_argument);
}

TEST_CASE("FNV-1a reference values") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(hex64(0xabcULL) == "0000000000000abc");
}

TEST_CASE("CSV quoting") {
  Table t{{"a", "b"}, {{1, "x,y"}, {2.5, "plain"}}};
  CHECK(to_csv(t) == "a,b\n1,\"x,y\"\n2.5,plain\n");
}

TEST_CASE("registry and configuration") {
  const auto& names = experiment_names();
  for (const char* n : {"grad-check", "hess-check", "hand-check", "bounds", "gap-rate", "stationary-pair",
                        "loo-stability", "norm-audit", "tail", "net-norms", "degenerate-audit"})
    CHECK(std::find(names.begin(), names.end(), n) != names.end());
  for (const auto& n : names) {
    const Json c = default_config(n);
    CHECK(c.at("experiment") == n);
    CHECK(c.size() > 1);
  }
  CHECK_THROWS_AS(default_config("nope"), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config({{"experiment", "nope"}}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config(Json::object()), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config({{"experiment", "gap-rate"}, {"n_grid", Json::array()}}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config({{"experiment", "gap-rate"}, {"n_grid", "0,8"}}), std::invalid_argument);
  CHECK_THROWS_AS(resolve_config({{"experiment", "gap-rate"}, {"arch", "20,20,20"}}), std::invalid_argument);
  CHECK_NOTHROW(resolve_config({{"experiment", "gap-rate"}, {"arch", "16,16,16"}}));
  const Json r = resolve_config({{"experiment", "gap-rate"}, {"trials", 3}});
  CHECK(r.at("trials") == 3);
  CHECK(r.at("probes") == default_config("gap-rate").at("probes"));
}

TEST_CASE("documents are deterministic and thread-count independent") {
  const Json cfg{{"experiment", "net-norms"}, {"cases", 10}};
  setenv("LP_THREADS", "1", 1);
  const RunResult a = run(cfg);
  setenv("LP_THREADS", "3", 1);
  const RunResult b = run(cfg);
  unsetenv("LP_THREADS");
  CHECK(a.document.at("schema") == "lp-1");
  CHECK(a.document.at("result_hash") == b.document.at("result_hash"));
  CHECK(a.document.at("input_hash") == b.document.at("input_hash"));
  CHECK(a.document.contains("runtime_seconds"));
  CHECK(a.pass());
  Json stripped = a.document;
  stripped.erase("runtime_seconds");
  stripped.erase("result_hash");
  CHECK(a.document.at("result_hash") == hex64(fnv1a64(stripped.dump())));

  const RunResult c = run({{"experiment", "net-norms"}, {"cases", 10}, {"seed", 99}});
  CHECK(c.document.at("result_hash") != a.document.at("result_hash"));
}

TEST_CASE("two-input gap rate stays in the slope band") {
  // With d_0 = 2 Rademacher inputs the moment error is the single scalar mean(x1 x2).
  const RunResult r = run({{"experiment", "gap-rate"}, {"arch", "2,3,2"}});
  const double slope = r.document.at("result").at("fit").at("slope").get<double>();
  CHECK(slope >= -0.65);
  CHECK(slope <= -0.35);
  CHECK(r.pass());
}

TEST_CASE("thread count override") {
  setenv("LP_THREADS", "2", 1);
  CHECK(default_threads() == 2);
  unsetenv("LP_THREADS");
  CHECK(default_threads() >= 1);
  std::vector<int> hit(1000, 0);
  parallel_for(1000, [&](long i) { hit[static_cast<std::size_t>(i)] += 1; });
  CHECK(std::count(hit.begin(), hit.end(), 1) == 1000);
}

TEST_CASE("outputs are written with the CSV table") {
  const fs::path dir = fs::temp_directory_path() / "lp_harness_test";
  fs::remove_all(dir);
  const RunResult r = run({{"experiment", "tail"}, {"trials", 20}});
  write_outputs(r, dir / "sub" / "tail.json", dir / "tail.csv");
  std::ifstream js(dir / "sub" / "tail.json");
  const Json back = Json::parse(js);
  CHECK(back.at("result_hash") == r.document.at("result_hash"));
  std::ifstream cs(dir / "tail.csv");
  std::string header;
  std::getline(cs, header);
  CHECK(header.find('n') != std::string::npos);
  fs::remove_all(dir);
}

#ifdef LP_PROBE_PATH
TEST_CASE("command line: invalid grid exits non-zero without output") {
  const fs::path out = fs::temp_directory_path() / "lp_probe_empty_grid.json";
  fs::remove(out);
  const std::string cmd =
      std::string(LP_PROBE_PATH) + " gap-rate --n-grid '' --out " + out.string() + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  CHECK(status != 0);
  CHECK_FALSE(fs::exists(out));

  const std::string list = std::string(LP_PROBE_PATH) + " --list >/dev/null";
  CHECK(std::system(list.c_str()) == 0);
  const std::string bad = std::string(LP_PROBE_PATH) + " no-such-experiment 2>/dev/null";
  CHECK(std::system(bad.c_str()) != 0);
}
#endif
