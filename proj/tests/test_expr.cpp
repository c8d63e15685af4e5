#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "neurobt/expr.hpp"

using neurobt::Expr;

namespace {

// the rate/steady-state functions used by the three presets
const std::vector<std::string> kKinetics = {
    // Wang-Buzsaki
    "-0.1*(V+35)/(exp(-0.1*(V+35))-1)",
    "4*exp(-(V+60)/18)",
    "0.07*exp(-(V+58)/20)",
    "1/(exp(-0.1*(V+28))+1)",
    "-0.01*(V+34)/(exp(-0.1*(V+34))-1)",
    "0.125*exp(-(V+44)/80)",
    "1/(exp(-(V+27)/7)+1)",
    "1/(0.003*(exp((V+63)/15)+exp(-(V+63)/15)))",
    // Stiefel
    "1/(exp(-(V+30)/9.5)+1)",
    "1/(exp(-(V+39)/5)+1)",
    "1/(exp((V+53)/7)+1)",
    "1/(exp(-(V+30)/10)+1)",
    "0.37+2.78/(exp((V+40.5)/6)+1)",
    "0.37+1.85/(exp((V+27)/15)+1)",
    // RTM
    "0.32*(V+54)/(1-exp(-(V+54)/4))",
    "0.28*(V+27)/(exp((V+27)/5)-1)",
    "0.128*exp(-(V+50)/18)",
    "4/(exp(-(V+27)/5)+1)",
    "0.032*(V+52)/(1-exp(-(V+52)/5))",
    "0.5*exp(-(V+57)/40)",
    "1/(exp(-(V+35)/10)+1)",
    "400/(3.3*exp((V+35)/20)+exp(-(V+35)/20))",
};

double central_diff(const Expr& e, double v, double h) { return (e(v + h) - e(v - h)) / (2 * h); }

}  // namespace

TEST_CASE("parse basics") {
  Expr winf = Expr::parse("1/(exp(-(V+27)/7)+1)");
  CHECK(winf(-27.0) == doctest::Approx(0.5).epsilon(1e-14));

  Expr id = Expr::parse("V");
  CHECK(id(-65.0) == -65.0);

  Expr ah = Expr::parse("0.07*exp(-(V+58)/20)");
  CHECK(ah(-58.0) == doctest::Approx(0.07).epsilon(1e-15));
}

TEST_CASE("parse errors carry byte offsets") {
  CHECK_THROWS_AS(Expr::parse("1+*2"), neurobt::ParseError);
  try {
    Expr::parse("1+*2");
  } catch (const neurobt::ParseError& e) {
    CHECK(e.offset == 2);
  }

  try {
    Expr::parse("foo(V)");
    CHECK(false);
  } catch (const neurobt::UnknownIdentifierError& e) {
    CHECK(e.name == "foo");
    CHECK(e.offset == 0);
  }

  CHECK_THROWS_AS(Expr::parse("V^V"), neurobt::ParseError);
  CHECK_THROWS_AS(Expr::parse("(V+1"), neurobt::ParseError);
  CHECK_THROWS_AS(Expr::parse(""), neurobt::ParseError);
  CHECK_THROWS_AS(Expr::parse("1 2"), neurobt::ParseError);
}

TEST_CASE("removable singularities evaluate to their limits") {
  Expr am = Expr::parse("0.32*(V+54)/(1-exp(-(V+54)/4))");
  CHECK(am(-54.0) == doctest::Approx(1.28).epsilon(1e-12));

  Expr tw = Expr::parse("400/(3.3*exp((V+35)/20)+exp(-(V+35)/20))");
  CHECK(tw(-35.0) == doctest::Approx(400.0 / 4.3).epsilon(1e-14));

  Expr amwb = Expr::parse("-0.1*(V+35)/(exp(-0.1*(V+35))-1)");
  CHECK(amwb(-35.0) == doctest::Approx(1.0).epsilon(1e-12));

  // series path agrees with the raw formula at the same point near the seam
  for (double side : {-1.0, 1.0}) {
    for (double u : {0.99e-4, 0.5e-4}) {
      double v = -54.0 + side * u;
      double direct = 0.32 * (v + 54) / (1 - std::exp(-(v + 54) / 4));
      CHECK(am(v) == doctest::Approx(direct).epsilon(1e-9));
    }
  }
}

TEST_CASE("non-finite evaluation is reported, raw eval is not") {
  Expr e = Expr::parse("exp(V)");
  CHECK(std::isinf(e(1e4)));
  CHECK_THROWS_AS(e.eval_checked(1e4), neurobt::NonFiniteError);

  Expr pole = Expr::parse("1/(exp(V)-1)");  // genuine pole at 0 in the / direction
  CHECK(std::isfinite(pole(1.0)));
  CHECK_THROWS_AS(Expr::parse("1/0").eval_checked(0.0), neurobt::NonFiniteError);
}

TEST_CASE("differentiation basics") {
  Expr c = Expr::parse("2.5");
  Expr dc = c.diff();
  double v = 0;
  CHECK(dc.is_constant(&v));
  CHECK(v == 0.0);

  Expr winf = Expr::parse("1/(exp(-(V+27)/7)+1)");
  Expr d1 = winf.diff(1);
  CHECK(d1(-27.0) == doctest::Approx(1.0 / 28.0).epsilon(1e-12));
  CHECK(std::abs(d1(-27.0) - central_diff(winf, -27.0, 1e-5)) < 1e-8);

  Expr d2 = winf.diff(2);
  CHECK(std::abs(d2(-27.0)) < 1e-10);  // sigmoid inflection
}

TEST_CASE("pow and tanh") {
  CHECK(Expr::parse("2^3")(0.0) == 8.0);
  CHECK(Expr::parse("2^-2")(0.0) == 0.25);
  Expr sq = Expr::parse("(V+1)^2");
  CHECK(sq.diff()(3.0) == doctest::Approx(8.0));
  Expr rt = Expr::parse("V^0.5");
  CHECK(rt(4.0) == doctest::Approx(2.0));
  CHECK(rt.diff()(4.0) == doctest::Approx(0.25));

  Expr th = Expr::parse("1+tanh(V/4)");
  CHECK(th(0.0) == doctest::Approx(1.0));
  CHECK(th.diff()(0.0) == doctest::Approx(0.25));
  for (double x = -120; x <= 60; x += 1) {
    CHECK(th(x) >= 0.0);
    CHECK(th(x) <= 2.0);
  }
}

TEST_CASE("print/parse round-trip") {
  for (const auto& src : kKinetics) {
    Expr e = Expr::parse(src);
    Expr r = Expr::parse(e.str());
    for (int i = 0; i < 1000; ++i) {
      double v = -120.0 + 180.0 * i / 999.0;
      double a = e(v), b = r(v);
      CHECK(std::abs(a - b) <= 1e-12 * (std::abs(a) + 1e-300));
    }
  }
}

TEST_CASE("first derivative matches central finite differences") {
  const double h = 1e-4;
  for (const auto& src : kKinetics) {
    Expr e = Expr::parse(src);
    Expr d = e.diff(1);
    for (double v = -120; v <= 60; v += 1) {
      double fd = central_diff(e, v, h);
      CHECK(std::abs(d(v) - fd) <= 1e-6);
    }
  }
}

TEST_CASE("second derivative exists and matches finite differences of the first") {
  // h large enough that probes of d1 sit well clear of the series seams
  const double h = 1e-3;
  for (const auto& src : kKinetics) {
    Expr e = Expr::parse(src);
    Expr d1 = e.diff(1);
    Expr d2 = e.diff(2);
    for (double v = -119.5; v <= 60; v += 2.5) {
      double fd = central_diff(d1, v, h);
      CHECK(std::abs(d2(v) - fd) <= 1e-5 * (1 + std::abs(fd)));
    }
  }
}

TEST_CASE("rate composition helpers") {
  Expr am = Expr::parse("0.32*(V+54)/(1-exp(-(V+54)/4))");
  Expr bm = Expr::parse("0.28*(V+27)/(exp((V+27)/5)-1)");
  Expr minf = neurobt::xinf_from_rates(am, bm);
  Expr taum = neurobt::tau_from_rates(am, bm);
  for (double v = -120; v <= 60; v += 0.5) {
    double x = minf(v);
    CHECK(x >= 0.0);
    CHECK(x <= 1.0);
    CHECK(taum(v) > 0.0);
  }
  // consistent at the removable points of the underlying rates
  CHECK(minf(-54.0) == doctest::Approx(am(-54.0) / (am(-54.0) + bm(-54.0))).epsilon(1e-12));
  CHECK(std::abs(minf.diff()(-54.0) - central_diff(minf, -54.0, 1e-4)) < 1e-8);
}

TEST_CASE("arithmetic operators fold constants") {
  Expr two = Expr::constant(2);
  Expr five = two + Expr::constant(3);
  double v = 0;
  CHECK(five.is_constant(&v));
  CHECK(v == 5.0);
  Expr x = Expr::var();
  CHECK(!(x * two).is_constant());
  CHECK((x * Expr::constant(0)).is_constant(&v));
  CHECK(v == 0.0);
}
