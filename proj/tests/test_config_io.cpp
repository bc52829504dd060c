#include <fstream>

#include "dibs/config.hpp"
#include "dibs/pipeline.hpp"
#include "doctest.h"

using namespace dibs;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream is(path);
  REQUIRE(is);
  return std::string(std::istreambuf_iterator<char>(is),
                     std::istreambuf_iterator<char>());
}

const std::string kConfigDir = std::string(SRC_DIR) + "/configs/";

}  // namespace

TEST_SUITE("config_io") {

TEST_CASE("the bundled three-pair configuration loads") {
  const auto cfg = load_config(kConfigDir + "paper_n3.json");
  CHECK(cfg.net.tau == 0.1);
  CHECK(cfg.net.eps_tilde_norm == NormConvention::euclidean);
  CHECK(cfg.net.margin == SpecMargin::eps);
  CHECK(cfg.net.safe_margin == SafeMargin::value);
  REQUIRE(cfg.net.templates.size() == 2);
  REQUIRE(cfg.net.instances.size() == 6);
  CHECK(cfg.x0.size() == 6);

  SUBCASE("chain wiring: the first upper stage has a pinned-zero slot") {
    const auto& first = cfg.net.instance("1_1");
    REQUIRE(first.neighbors.size() == 2);
    CHECK(first.neighbors[0].zero);
    CHECK(first.neighbors[1].id == "2_1");
    const auto& mid = cfg.net.instance("1_2");
    CHECK(mid.neighbors[0].id == "1_1");
    CHECK(mid.neighbors[1].id == "2_2");
    const auto& lower = cfg.net.instance("2_3");
    REQUIRE(lower.neighbors.size() == 1);
    CHECK(lower.neighbors[0].id == "1_3");
  }

  SUBCASE("the derived topology matches the cascade") {
    const auto topo = cfg.net.topology();
    CHECK(topo.neighbors("2_2") == std::vector<std::string>{"1_2"});
    CHECK(topo.neighbors("1_2") ==
          std::vector<std::string>{"1_1", "2_2"});
    CHECK(topo.neighbors("1_1") == std::vector<std::string>{"2_1"});
  }
}

TEST_CASE("config hashes are stable and discriminating") {
  const std::string text = slurp(kConfigDir + "paper_n3.json");
  const auto a = parse_config(text);
  const auto b = parse_config(text);
  CHECK(a.hash == b.hash);
  const auto c = load_config(kConfigDir + "paper_n100.json");
  CHECK(c.hash != a.hash);
  CHECK(c.net.instances.size() == 200);
}

TEST_CASE("schema violations carry field paths") {
  const std::string base = slurp(kConfigDir + "desk_bisim.json");
  SUBCASE("missing tau") {
    std::string broken = base;
    broken.replace(broken.find("\"tau\""), 5, "\"no_tau\"");
    CHECK_THROWS(parse_config(broken));
  }
  SUBCASE("bad norm name") {
    std::string broken = base;
    broken.replace(broken.find("\"inf\""), 5, "\"l7\"");
    CHECK_THROWS_WITH_AS(parse_config(broken), doctest::Contains("eps_tilde_norm"),
                         std::runtime_error);
  }
  SUBCASE("unknown slot source") {
    std::string broken = base;
    broken.replace(broken.find("\"wsource\"}]"), 11, "\"missing\"}]");
    CHECK_THROWS_WITH_AS(parse_config(broken), doctest::Contains("template"),
                         std::runtime_error);
  }
}

TEST_CASE("neighbor slots must follow instance order") {
  const std::string text = R"({
    "tau": 0.1,
    "templates": [
      {"name": "a", "A": [[-1]], "B": [[1]], "D": [[0.1, 0.2]],
       "state_domain": {"lower": [-1], "upper": [1]},
       "input_domain": {"lower": [-1], "upper": [1]},
       "lyapunov": {"lambda": 1, "alpha_low": 1, "alpha_high": 1,
                    "gamma": 1, "sigma_u": 1, "sigma_d": 1},
       "v_coeffs": [1], "eps": 0.5, "omega": 0.1,
       "target": {"kind": "rectangle", "lower": [-1], "upper": [1]},
       "slots": [{"source": "b"}, {"source": "b"}]},
      {"name": "b", "A": [[-1]], "B": [[]], "D": [[]],
       "state_domain": {"lower": [-1], "upper": [1]},
       "input_domain": {"lower": [], "upper": []},
       "lyapunov": {"lambda": 1, "alpha_low": 1, "alpha_high": 1,
                    "gamma": 1, "sigma_u": 1, "sigma_d": 1},
       "v_coeffs": [1], "eps": 0.5, "omega": 0,
       "target": {"kind": "rectangle", "lower": [-1], "upper": [1]},
       "slots": []}
    ],
    "network": {"instances": [
      {"id": "w1", "template": "b", "neighbors": []},
      {"id": "w2", "template": "b", "neighbors": []},
      {"id": "p", "template": "a",
       "neighbors": [{"id": "w2"}, {"id": "w1"}]}
    ]}
  })";
  CHECK_THROWS_WITH_AS(parse_config(text), doctest::Contains("instance order"),
                       std::invalid_argument);
}

TEST_CASE("the zero-dynamics smoke configuration self-loops") {
  const auto cfg = load_config(kConfigDir + "smoke_zero.json");
  const auto rep = solve_network_params(cfg.net);
  REQUIRE(rep.feasible);
  const auto& t = cfg.net.templates[0];
  const auto abs = build_abstraction(
      t.field, rep.templates[0].params, t.state_domain, t.input_domain,
      abstraction_disturbance(cfg.net, 0, rep), AbstractionMode::box);
  for (std::size_t s = 0; s < abs.n_states(); ++s)
    for (std::size_t u = 0; u < abs.n_inputs(); ++u) {
      std::vector<grid_index> succ;
      abs.for_each_successor(abs.record(s, u),
                             [&](grid_index q) { succ.push_back(q); });
      CHECK(succ == std::vector<grid_index>{static_cast<grid_index>(s)});
    }
}

}  // TEST_SUITE
