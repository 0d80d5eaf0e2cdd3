#include "support.hpp"

#include "tsfilt/error.hpp"
#include "tsfilt/model.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace tsfilt;
using namespace tsfilt::testing;

namespace {

double sig(double offset, double scale, double center, double t) { return offset + scale / (1.0 + std::exp(-(t - center))); }

}  // namespace

TEST_SUITE("model") {
  TEST_CASE("example 1 loads with the expected dimensions") {
    const auto m = example1();
    CHECK(m.dims() == Dims{2, 1, 1, 1});
    CHECK(m.plant_rule_count() == 2);
    CHECK(m.filter_rule_count == 2);
    CHECK(m.delay.h == 0.5);
    CHECK(m.delay.rho == 0.2);
    CHECK(m.upsilon == 1.0);
    CHECK(m.plant_rules[0].A(1, 0) == 1.0);
  }

  TEST_CASE("example 2 has three plant rules") {
    const auto m = example2();
    CHECK(m.plant_rule_count() == 3);
    CHECK(m.filter_rule_count == 2);
  }

  TEST_CASE("rho at or above one is rejected") {
    for (double rho : {1.0, 1.2}) {
      try {
        edited_model("example1.json", [&](nlohmann::json& d) { d["delay"]["rho"] = rho; });
        FAIL("accepted rho = " << rho);
      } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("delay derivative bound must be < 1") != std::string::npos);
      }
    }
  }

  TEST_CASE("malformed documents list every finding") {
    CHECK_THROWS_AS(load_model_file(test_file("bad_dims.json")), ValidationError);
    try {
      load_model_file(test_file("bad_dims.json"));
    } catch (const ValidationError& e) {
      REQUIRE(e.findings().size() == 1);
      CHECK(e.findings()[0].find("A is 3x2, expected 2x2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_model_text("{not json"), ValidationError);
    CHECK_THROWS_AS(edited_model("example1.json", [](nlohmann::json& d) { d["delay"]["h"] = -0.1; }), ValidationError);
    CHECK_THROWS_AS(edited_model("example1.json", [](nlohmann::json& d) { d.erase("plant_rules"); }), ValidationError);
    CHECK_THROWS_AS(edited_model("example1.json", [](nlohmann::json& d) { d["filter_rule_count"] = 3; }),
                    ValidationError);
  }

  TEST_CASE("membership weights match the sigmoids and their limits") {
    const auto m = example1();
    for (double t : {-7.0, -3.0, 0.0, 1.5, 4.0, 9.0}) {
      const auto w = evaluate_memberships(m, t);
      const double phi1 = sig(1.0, -0.5, -3.0, t);
      const double n1 = sig(0.7, -0.5, 4.0, t);
      CHECK(w.plant[0] == doctest::Approx(phi1).epsilon(1e-14));
      CHECK(w.plant[1] == doctest::Approx(1.0 - phi1).epsilon(1e-14));
      CHECK(w.filter[0] == doctest::Approx(n1).epsilon(1e-14));
      CHECK(w.filter[1] == doctest::Approx(1.0 - n1).epsilon(1e-14));
    }
    const auto hi = evaluate_memberships(m, 100.0);
    CHECK(hi.plant[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(hi.plant[1] == doctest::Approx(0.5).epsilon(1e-12));
    const auto lo = evaluate_memberships(m, -100.0);
    CHECK(lo.filter[0] == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(lo.filter[1] == doctest::Approx(0.3).epsilon(1e-12));

    const auto asym = m.filter_memberships.asymptotes();
    REQUIRE(asym.has_value());
    CHECK(asym->first[0] == doctest::Approx(0.7));
    CHECK(asym->second[0] == doctest::Approx(0.2));
  }

  TEST_CASE("weights sum to one") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(-60.0, 60.0);
    for (const auto& m : {example1(), example2()}) {
      for (int k = 0; k < 200; ++k) {
        const auto w = evaluate_memberships(m, u(rng));
        CHECK(w.plant.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(w.filter.sum() == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(w.plant.minCoeff() >= 0.0);
        CHECK(w.filter.minCoeff() >= 0.0);
      }
    }
  }

  TEST_CASE("product bounds agree with a brute-force grid") {
    const auto m = example1();
    const auto b = membership_product_bounds(m);
    double lo = 1e300, hi = -1e300;
    for (int k = 0; k < 10001; ++k) {
      const double t = -50.0 + 100.0 * k / 10000.0;
      const double d = sig(1.0, -0.5, -3.0, t) * sig(0.7, -0.5, 4.0, t);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    CHECK(b.d_upper(0, 0) == doctest::Approx(0.70).epsilon(1e-3));
    CHECK(b.d_lower(0, 0) == doctest::Approx(0.10).epsilon(1e-3));
    CHECK(b.d_upper(0, 0) >= hi - 1e-12);
    CHECK(b.d_lower(0, 0) <= lo + 1e-12);
    CHECK(b.d_upper.sum() >= 1.0);
    CHECK(b.d_lower.sum() <= 1.0);
    CHECK((b.d_lower.array() <= b.d_upper.array()).all());
  }

  TEST_CASE("bounds of example 2 bracket the blended weights") {
    const auto m = example2();
    const auto b = membership_product_bounds(m);
    CHECK(b.d_upper.rows() == 3);
    CHECK(b.d_upper.cols() == 2);
    CHECK(b.d_upper.sum() >= 1.0);
    CHECK(b.d_lower.sum() <= 1.0);
    for (double t = -20.0; t <= 20.0; t += 0.37) {
      const auto w = evaluate_memberships(m, t);
      const Matrix d = w.plant * w.filter.transpose();
      CHECK((d.array() <= b.d_upper.array() + 1e-12).all());
      CHECK((d.array() >= b.d_lower.array() - 1e-12).all());
    }
  }

  TEST_CASE("single-rule model has unit product bounds") {
    const auto m = load_model_file(test_file("single_rule.json"));
    const auto b = membership_product_bounds(m);
    CHECK(b.d_lower(0, 0) == doctest::Approx(1.0));
    CHECK(b.d_upper(0, 0) == doctest::Approx(1.0));
  }

  TEST_CASE("widening the bounds domain never tightens the bounds") {
    const auto m = example1();
    const auto narrow = membership_product_bounds(m, {-5.0, 5.0}, 2001, false);
    const auto wide = membership_product_bounds(m, {-20.0, 20.0}, 8001, false);
    CHECK((wide.d_upper.array() >= narrow.d_upper.array() - 1e-12).all());
    CHECK((wide.d_lower.array() <= narrow.d_lower.array() + 1e-12).all());
  }

  TEST_CASE("serialization round-trips") {
    for (const auto& m : {example1(), example2()}) {
      const auto again = load_model(serialize(m));
      CHECK(again == m);
    }
  }
}
