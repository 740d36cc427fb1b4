#include "oracles.hpp"

#include "mpqdpg/dynamics.hpp"
#include "mpqdpg/errors.hpp"
#include "mpqdpg/rng.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace mpqdpg;
using namespace mpqdpg::dynamics;

namespace {

VehicleState random_state(Rng& rng) {
    VehicleState s;
    s.x = uniform(rng, -50, 50);
    s.y = uniform(rng, -50, 50);
    s.psi = uniform(rng, -std::numbers::pi, std::numbers::pi);
    s.u = uniform(rng, -3, 3);
    s.v = uniform(rng, -3, 3);
    s.r = uniform(rng, -2, 2);
    return s;
}

}  // namespace

TEST_CASE("saturate clamps and is idempotent") {
    CHECK(saturate(100.0, 86.0) == 86.0);
    CHECK(saturate(-0.1, 0.2374) == -0.1);
    CHECK(saturate(-200.0, 86.0) == -86.0);
    Rng rng = make_rng(3, Stream::environment);
    for (int i = 0; i < 1000; ++i) {
        const double v = uniform(rng, -500, 500);
        CHECK(saturate(saturate(v, 86.0), 86.0) == saturate(v, 86.0));
    }
    CHECK_THROWS_AS(saturate(std::nan(""), 1.0), NumericError);
    CHECK_THROWS_AS(saturate(INFINITY, 1.0), NumericError);

    const ControlInput applied = saturate(ControlInput{1000.0, 1.0});
    CHECK(applied.thrust == 86.0);
    CHECK(applied.rudder == doctest::Approx(0.2374).epsilon(1e-4));
    CHECK(kRudderLimit == 13.6 * std::numbers::pi / 180.0);
}

TEST_CASE("transform is a planar rotation") {
    CHECK(transform(0.0).isApprox(Mat3::Identity(), 0.0));
    const Vec3 turned = transform(std::numbers::pi / 2) * Vec3(1, 0, 0);
    CHECK(turned(0) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(turned(1) == doctest::Approx(1.0));
    CHECK(turned(2) == 0.0);
    const Mat3 J = transform(std::numbers::pi / 4);
    CHECK(J(0, 0) == doctest::Approx(std::sqrt(2.0) / 2));
    CHECK(J(0, 1) == doctest::Approx(-std::sqrt(2.0) / 2));

    Rng rng = make_rng(4, Stream::environment);
    for (int i = 0; i < 1000; ++i) {
        const Mat3 R = transform(uniform(rng, -std::numbers::pi, std::numbers::pi));
        CHECK((R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(std::abs(R.determinant() - 1.0) < 1e-12);
    }
}

TEST_CASE("inertia matrix entries for REMUS") {
    const ModelCoefficients k;
    const Mat3 M = inertia_matrix(k);
    CHECK(M(0, 0) == doctest::Approx(31.41).epsilon(1e-12));
    CHECK(M(1, 1) == doctest::Approx(65.98).epsilon(1e-12));
    CHECK(M(1, 2) == doctest::Approx(-1.93).epsilon(1e-12));
    CHECK(M(2, 1) == doctest::Approx(-1.93).epsilon(1e-12));
    CHECK(M(2, 2) == doctest::Approx(8.33).epsilon(1e-12));
    // m1 (m2 m5 - m3 m4)
    const double det = 31.41 * (65.98 * 8.33 - 1.93 * 1.93);
    CHECK(M.determinant() == doctest::Approx(det).epsilon(1e-12));
    CHECK(std::abs(M.determinant()) > 100.0);
}

TEST_CASE("build_matrices structure") {
    const ModelCoefficients k;
    const ModelMatrices rest = build_matrices(k, Vec3::Zero());
    CHECK(rest.C.isZero(0.0));
    CHECK(rest.D.isZero(0.0));

    Rng rng = make_rng(5, Stream::environment);
    for (int i = 0; i < 1000; ++i) {
        const Vec3 phi(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -2, 2));
        const ModelMatrices mm = build_matrices(k, phi);
        CHECK((mm.C + mm.C.transpose()).cwiseAbs().maxCoeff() < 1e-12);
        CHECK(mm.G(0, 0) == 1.0);
        CHECK(mm.G(0, 1) == 0.0);
        CHECK(mm.G(1, 0) == 0.0);
        CHECK(mm.G(2, 0) == 0.0);
        CHECK(mm.G(1, 1) == doctest::Approx(k.Y_uud * phi(0) * phi(0)));
    }

    ModelCoefficients singular = k;
    singular.mass = 0.0;
    singular.X_udot = 0.0;
    CHECK_THROWS_AS(build_matrices(singular, Vec3::Zero()), ModelError);
    CHECK_THROWS_AS(VehicleModel{singular}, ModelError);
}

TEST_CASE("derivative examples") {
    const VehicleModel model;
    CHECK(model.derivative(VehicleState{}, ControlInput{}).isZero(0.0));

    VehicleState surge;
    surge.u = 1.0;
    const Vec6 d = model.derivative(surge, ControlInput{});
    CHECK(d(3) == doctest::Approx(-1.62 / 31.41).epsilon(1e-12));
    CHECK(d(3) == doctest::Approx(-0.05158).epsilon(1e-4));
    CHECK(d(0) == 1.0);
    CHECK(d(4) == 0.0);
    CHECK(d(5) == 0.0);
}

TEST_CASE("derivative matches elimination oracle") {
    const ModelCoefficients k;
    const VehicleModel model(k);
    Rng rng = make_rng(6, Stream::environment);
    double worst = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const VehicleState s = random_state(rng);
        const ControlInput tau{uniform(rng, -86, 86), uniform(rng, -kRudderLimit, kRudderLimit)};
        const Vec6 got = model.derivative(s, tau);
        const auto want = oracle::derivative(k, s, tau.thrust, tau.rudder);
        for (int j = 0; j < 6; ++j) worst = std::max(worst, std::abs(got(j) - want[static_cast<std::size_t>(j)]));
    }
    CHECK(worst < 1e-12);
}

TEST_CASE("step examples") {
    const VehicleModel model;
    for (double Ts : {0.01, 0.1, 1.0}) {
        const VehicleState s = model.step(VehicleState{}, ControlInput{}, Ts);
        CHECK(s.x == 0.0);
        CHECK(s.u == 0.0);
        CHECK(s.psi == 0.0);
    }

    VehicleState surge;
    surge.u = 1.0;
    const VehicleState next = model.step(surge, ControlInput{}, 0.1);
    CHECK(next.x == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(next.u == doctest::Approx(1.0 + 0.1 * (-1.62 / 31.41)).epsilon(1e-15));
    CHECK(next.u == doctest::Approx(0.99484).epsilon(1e-5));

    VehicleState spinning;
    spinning.psi = std::numbers::pi - 0.01;
    spinning.r = 0.5;
    const VehicleState wrapped = model.step(spinning, ControlInput{}, 0.1);
    CHECK(wrapped.psi >= -std::numbers::pi);
    CHECK(wrapped.psi <= std::numbers::pi);
    CHECK(wrapped.psi == doctest::Approx(-std::numbers::pi + 0.04).epsilon(1e-9));

    CHECK_THROWS_AS(model.step(surge, ControlInput{}, 0.0), UsageError);
}

TEST_CASE("step is first order") {
    const VehicleModel model;
    VehicleState start;
    start.u = 1.2;
    start.v = 0.1;
    start.r = 0.05;
    start.psi = 0.3;
    const ControlInput tau{20.0, 0.05};
    const double horizon = 2.0;

    auto integrate = [&](double h) {
        VehicleState s = start;
        const int n = static_cast<int>(std::lround(horizon / h));
        for (int i = 0; i < n; ++i) s = model.step(s, tau, h);
        return s;
    };
    auto distance = [](const VehicleState& a, const VehicleState& b) {
        return std::hypot(a.x - b.x, a.y - b.y, a.u - b.u) + std::abs(a.psi - b.psi) + std::abs(a.v - b.v) +
               std::abs(a.r - b.r);
    };

    const VehicleState reference = integrate(1e-5);
    double previous = distance(integrate(0.1), reference);
    for (double h : {0.05, 0.025}) {
        const double err = distance(integrate(h), reference);
        const double ratio = previous / err;
        CHECK(ratio == doctest::Approx(2.0).epsilon(0.2));
        previous = err;
    }
}
