#include <cmath>
#include <random>

#include "biopepa/error.hpp"
#include "biopepa/kinetics.hpp"
#include "support.hpp"

using namespace biopepa;
using testing::kCell;
using testing::network_of;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::Io;
}

Parameter param(std::string name, std::string_view expr) {
  auto r = parse_expression(expr);
  REQUIRE(r.ok());
  return {std::move(name), *r.expression, {}};
}

const char* kMM =
    "location cell : size = 1;\n"
    "vM = 10;\nkM = 2;\n"
    "kineticLawOf v : fMM(vM, kM);\n"
    "S = v << S@cell;\nE = v (+) E@cell;\nP = v >> P@cell;\n"
    "S@cell[2] <*> E@cell[5] <*> P@cell[0]";

}  // namespace

TEST_SUITE("kinetics") {
  TEST_CASE("resolve_parameters") {
    auto values = resolve_parameters({param("omega_cyto", "602")});
    CHECK(values.at("omega_cyto") == 602);
    values = resolve_parameters({param("a", "2"), param("b", "a*3")});
    CHECK(values.at("b") == 6);
    values = resolve_parameters({param("b", "a*3"), param("a", "2")});
    CHECK(values.at("b") == 6);
    CHECK(code_of([] { resolve_parameters({param("a", "b"), param("b", "a")}); }) ==
          ErrorCode::CyclicParameter);
    CHECK(code_of([] { resolve_parameters({param("a", "c + 1")}); }) ==
          ErrorCode::UndefinedParameter);
    CHECK(code_of([] { resolve_parameters({param("a", "1 / (2 - 2)")}); }) ==
          ErrorCode::DivisionByZero);
  }

  TEST_CASE("eval_expression over the bundled model") {
    auto net = network_of(testing::corpus_text());
    auto params = resolve_parameters(net.parameters);
    std::vector<double> x(net.initial_state.begin(), net.initial_state.end());
    EvalEnvironment env{&params, &net, x.data(), 0.0};
    auto e = parse_expression("Kf_trimer / omega_cyto");
    REQUIRE(e.ok());
    CHECK(eval_expression(*e.expression, env) == doctest::Approx(6.0 / 602.0).epsilon(1e-15));
    CHECK(eval_expression(*e.expression, env) == doctest::Approx(0.00996677741).epsilon(1e-9));
    // MAPK 217, MAPK_active 0 at the start.
    CHECK(eval_expression(net.observables[0].body, env) == 0.0);
    auto resolved = Expression::ref("cyto_mem", {}, RefKind::LocationSize);
    CHECK(eval_expression(resolved, env) == 0.2);
  }

  TEST_CASE("division by zero names the law") {
    auto net = network_of(std::string(kCell) +
                          "kineticLawOf a : 1 / (A@cell - A@cell);\nA = a << A@cell;\nA@cell[3]");
    auto params = resolve_parameters(net.parameters);
    auto rates = bind_rates(net, params);
    double x = 3;
    try {
      rates[0](&x, 0.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::DivisionByZero);
      CHECK(std::string(e.what()).find("kinetic law of a") != std::string::npos);
    }
  }

  TEST_CASE("mass action on v11f") {
    auto net = network_of(testing::corpus_text());
    auto params = resolve_parameters(net.parameters);
    auto j = *net.reaction_index("v11f");
    auto rate = bind_kinetic_law(net.reactions[j].law, net.reactions[j], net, params);
    std::vector<double> x(net.species.size(), 0.0);
    x[*net.species_index("G_GDP", "cyto")] = 100;
    x[*net.species_index("bg", "cyto")] = 50;
    CHECK(rate(x.data(), 0.0) == doctest::Approx(6.0 / 602.0 * 100 * 50).epsilon(1e-14));
    CHECK(rate(x.data(), 0.0) == doctest::Approx(49.8338870).epsilon(1e-8));
    x[*net.species_index("bg", "cyto")] = 0;
    CHECK(rate(x.data(), 0.0) == 0.0);
  }

  TEST_CASE("Michaelis-Menten evaluation") {
    auto net = network_of(kMM);
    auto rates = bind_rates(net, resolve_parameters(net.parameters));
    std::vector<double> x{2, 5, 0};
    CHECK(rates[0](x.data(), 0.0) == 25.0);
    x[0] = 0;
    CHECK(rates[0](x.data(), 0.0) == 0.0);
    x[0] = -1;  // continuous overshoot reads as zero
    CHECK(rates[0](x.data(), 0.0) == 0.0);
    CHECK(rates[0].kind() == RateFunction::Kind::MichaelisMenten);
    CHECK(rates[0].reads() == std::vector<std::size_t>{0, 1});
  }

  TEST_CASE("Michaelis-Menten is monotone and bounded") {
    auto net = network_of(kMM);
    auto rates = bind_rates(net, resolve_parameters(net.parameters));
    for (double e = 0; e <= 20; e += 1) {
      double prev = -1;
      for (double s = 0; s <= 200; s += 0.5) {
        std::vector<double> x{s, e, 0};
        double r = rates[0](x.data(), 0.0);
        CHECK(r >= prev);
        CHECK(r <= 10 * e);
        std::vector<double> more{s, e + 1, 0};
        CHECK(rates[0](more.data(), 0.0) >= r);
        prev = r;
      }
    }
  }

  TEST_CASE("fMA equals its custom expansion") {
    auto net = network_of(testing::corpus_text());
    auto params = resolve_parameters(net.parameters);
    auto j = *net.reaction_index("v01f");
    auto fma = bind_kinetic_law(net.reactions[j].law, net.reactions[j], net, params);
    KineticLaw custom{"v01f",
                      CustomLaw{Expression::binary(
                          BinaryOp::Mul, Expression::ref("Kf_activate_Gs", {}, RefKind::Parameter),
                          Expression::ref("iso_BAR_G", "cyto_mem", RefKind::SpeciesAmount))},
                      {}};
    auto expanded = bind_kinetic_law(custom, net.reactions[j], net, params);
    std::mt19937_64 gen(7);
    std::uniform_int_distribution<int> count(0, 500);
    for (int k = 0; k < 200; ++k) {
      std::vector<double> x(net.species.size());
      for (auto& v : x) v = count(gen);
      CHECK(fma(x.data(), 0.0) == expanded(x.data(), 0.0));
    }
  }

  TEST_CASE("bundled rates: nonnegative, time homogeneous, read sets complete") {
    auto net = network_of(testing::corpus_text());
    auto params = resolve_parameters(net.parameters);
    auto rates = bind_rates(net, params);
    REQUIRE(rates.size() == 45);
    std::mt19937_64 gen(11);
    std::uniform_int_distribution<int> count(0, 3000);
    for (int k = 0; k < 100; ++k) {
      std::vector<double> x(net.species.size());
      for (auto& v : x) v = count(gen);
      for (std::size_t j = 0; j < rates.size(); ++j) {
        double r = rates[j](x.data(), 0.0);
        CHECK(r >= 0.0);
        CHECK(rates[j](x.data(), 123.0) == r);
        // Changing a species outside the read set leaves the rate alone.
        for (std::size_t i = 0; i < x.size(); ++i) {
          const auto& reads = rates[j].reads();
          if (std::find(reads.begin(), reads.end(), i) != reads.end()) continue;
          auto y = x;
          y[i] += 17;
          CHECK(rates[j](y.data(), 0.0) == r);
        }
      }
    }
  }

  TEST_CASE("compiled expressions match tree evaluation") {
    auto net = network_of(std::string(kCell) +
                          "k = 3;\nh = k / 4 - 1;\n"
                          "kineticLawOf a : (k * A@cell - -B@cell) / (1 + h * cell + t);\n"
                          "A = a << A@cell;\nB = a >> B@cell;\n"
                          "ratio = A@cell / (A@cell + B@cell);\n"
                          "twice = 2 * ratio;\n"
                          "A@cell[3] <*> B@cell[1]");
    auto params = resolve_parameters(net.parameters);
    const auto& body = std::get<CustomLaw>(net.reactions[0].law.body).body;
    auto compiled = CompiledExpr::compile(body, net, params, false);
    CHECK(compiled.depends_on_time());
    CHECK(compiled.reads() == std::vector<std::size_t>{0, 1});
    auto obs = compile_observables(net, params);
    REQUIRE(obs.size() == 2);
    for (double a = 0; a < 5; ++a) {
      for (double t = 0; t < 3; t += 0.5) {
        std::vector<double> x{a, 2.0};
        EvalEnvironment env{&params, &net, x.data(), t};
        CHECK(compiled(x.data(), t) == doctest::Approx(eval_expression(body, env)).epsilon(1e-15));
        CHECK(obs[0](x.data(), t) == doctest::Approx(eval_expression(net.observables[0].body, env)));
        CHECK(obs[1](x.data(), t) == doctest::Approx(2 * obs[0](x.data(), t)));
      }
    }
    auto constant = CompiledExpr::compile(*parse_expression("2 * (3 + 4) / 7").expression, net,
                                          params, false);
    CHECK(constant.is_constant());
    CHECK(constant.program().size() == 1);
    CHECK(constant(nullptr, 0.0) == 2.0);
  }

  TEST_CASE("nonpositive size is reported") {
    auto net = network_of(
        "location cell : size = 2 * t;\n"
        "kineticLawOf a : cell * A@cell;\nA = a << A@cell;\nA@cell[1]");
    auto rates = bind_rates(net, resolve_parameters(net.parameters));
    double x = 1;
    CHECK(code_of([&] { rates[0](&x, 0.0); }) == ErrorCode::NonpositiveSize);
    CHECK(rates[0](&x, 1.0) == 2.0);
  }
}
