#include "mpqdpg/dynamics.hpp"

#include "mpqdpg/errors.hpp"

#include <algorithm>
#include <cmath>

namespace mpqdpg::dynamics {

bool VehicleState::finite() const {
    return std::isfinite(x) && std::isfinite(y) && std::isfinite(psi) && std::isfinite(u) &&
           std::isfinite(v) && std::isfinite(r);
}

double saturate(double value, double bound) {
    if (!std::isfinite(value)) {
        throw NumericError("saturate: non-finite input");
    }
    return std::clamp(value, -bound, bound);
}

ControlInput saturate(const ControlInput& tau, double thrust_limit, double rudder_limit) {
    return {saturate(tau.thrust, thrust_limit), saturate(tau.rudder, rudder_limit)};
}

Mat3 transform(double psi) {
    const double c = std::cos(psi);
    const double s = std::sin(psi);
    Mat3 J;
    J << c, -s, 0.0,
         s, c, 0.0,
         0.0, 0.0, 1.0;
    return J;
}

double wrap_angle(double angle) {
    // remainder() lands in [-pi, pi] with ties resolved to even multiples.
    return std::remainder(angle, 2.0 * std::numbers::pi);
}

Mat3 inertia_matrix(const ModelCoefficients& k) {
    const double m1 = k.mass - k.X_udot;
    const double m2 = k.mass - k.Y_vdot;
    const double m3 = k.mass * k.x_g - k.Y_rdot;
    const double m4 = k.mass * k.x_g - k.N_vdot;
    const double m5 = k.I_zz - k.N_rdot;
    Mat3 M;
    M << m1, 0.0, 0.0,
         0.0, m2, m3,
         0.0, m4, m5;
    return M;
}

ModelMatrices build_matrices(const ModelCoefficients& k, const Vec3& phi) {
    const double u = phi(0);
    const double v = phi(1);
    const double r = phi(2);

    ModelMatrices out;
    out.M = inertia_matrix(k);
    if (!(std::abs(out.M.determinant()) >= 1e-9)) {
        throw ModelError("inertia matrix is singular for the given coefficients");
    }

    // c1 mixes rigid-body and added-mass terms; kept exactly as tabulated.
    const double c1 = -k.mass * v - k.mass * k.x_g * r + k.Y_vdot * v + k.Y_rdot * r;
    const double c2 = k.mass * u - k.X_udot * u;
    out.C << 0.0, 0.0, c1,
             0.0, 0.0, c2,
             -c1, -c2, 0.0;

    const double d1 = -k.X_u - k.X_uu * std::abs(u);
    const double d2 = -k.Y_v - k.Y_uv * u - k.Y_vv * std::abs(v);
    const double d3 = -k.Y_r - k.Y_ur * u - k.Y_rr * std::abs(r);
    const double d4 = -k.N_v - k.N_uv * u - k.N_vv * std::abs(v);
    const double d5 = -k.N_r - k.N_ur * u - k.N_rr * std::abs(r);
    out.D << d1, 0.0, 0.0,
             0.0, d2, d3,
             0.0, d4, d5;

    out.G << 1.0, 0.0,
             0.0, k.Y_uud * u * u,
             0.0, k.N_uud * u * u;
    return out;
}

VehicleModel::VehicleModel(ModelCoefficients coeffs) : coeffs_(coeffs) {
    const Mat3 M = inertia_matrix(coeffs_);
    if (!(std::abs(M.determinant()) >= 1e-9)) {
        throw ModelError("inertia matrix is singular for the given coefficients");
    }
    M_inv_ = M.inverse();
}

Vec6 VehicleModel::derivative(const VehicleState& state, const ControlInput& tau) const {
    const Vec3 phi = state.velocity();
    const ModelMatrices mm = build_matrices(coeffs_, phi);
    const Eigen::Vector2d input(tau.thrust, tau.rudder);
    const Vec3 force = mm.G * input - mm.C * phi - mm.D * phi;

    Vec6 out;
    out.head<3>() = transform(state.psi) * phi;
    out.tail<3>() = M_inv_ * force;
    return out;
}

VehicleState VehicleModel::step(const VehicleState& state, const ControlInput& tau, double Ts) const {
    if (!(Ts > 0.0)) throw UsageError("step length must be positive");
    const Vec6 d = derivative(state, tau);
    VehicleState next;
    next.x = state.x + Ts * d(0);
    next.y = state.y + Ts * d(1);
    next.psi = wrap_angle(state.psi + Ts * d(2));
    next.u = state.u + Ts * d(3);
    next.v = state.v + Ts * d(4);
    next.r = state.r + Ts * d(5);
    if (!next.finite()) {
        throw NumericError("vehicle state became non-finite");
    }
    return next;
}

}  // namespace mpqdpg::dynamics
