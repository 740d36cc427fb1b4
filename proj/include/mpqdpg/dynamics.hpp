// Planar (surge, sway, yaw) dynamics of the REMUS AUV.
//
//   eta_dot = J(psi) phi
//   M phi_dot + C(phi) phi + D(phi) phi = G(phi) tau
//
// with eta = (x, y, psi) in the earth-fixed frame and phi = (u, v, r) in the
// body-fixed frame. Inputs tau = (thrust [N], rudder [rad]) are saturated by
// the caller; everything here is a pure function of its arguments.
#pragma once

#include <Eigen/Dense>

#include <numbers>

namespace mpqdpg::dynamics {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat32 = Eigen::Matrix<double, 3, 2>;
using Vec6 = Eigen::Matrix<double, 6, 1>;

inline constexpr double kThrustLimit = 86.0;                             // N
inline constexpr double kRudderLimit = 13.6 * std::numbers::pi / 180.0;  // rad

struct VehicleState {
    double x = 0.0;    // m
    double y = 0.0;    // m
    double psi = 0.0;  // rad, kept in [-pi, pi]
    double u = 0.0;    // m/s
    double v = 0.0;    // m/s
    double r = 0.0;    // rad/s

    Vec3 pose() const { return {x, y, psi}; }
    Vec3 velocity() const { return {u, v, r}; }
    bool finite() const;
};

struct ControlInput {
    double thrust = 0.0;  // N
    double rudder = 0.0;  // rad
};

/// Hydrodynamic and rigid-body coefficients. Defaults are the REMUS values.
struct ModelCoefficients {
    double mass = 30.48;  // kg
    double x_g = 0.0;     // m
    double I_zz = 3.45;   // kg m^2

    double X_u = 0.0;
    double X_uu = -1.62;     // X_{u|u|}, kg/m
    double X_udot = -0.93;   // kg

    double Y_v = 0.0;
    double Y_r = 0.0;
    double Y_vv = -1310.0;   // Y_{v|v|}, kg/m
    double Y_rr = 0.632;     // kg m/rad^2
    double Y_uv = -28.6;     // kg/m
    double Y_vdot = -35.5;   // kg
    double Y_rdot = 1.93;    // kg m/rad
    double Y_ur = 6.15;      // kg/rad
    double Y_uud = 9.64;     // Y_{uu delta}, kg/(m rad)

    double N_v = 0.0;
    double N_r = 0.0;
    double N_vv = -3.18;     // N_{v|v|}, kg
    double N_rr = -94.0;     // kg m^2/rad^2
    double N_uv = 10.62;     // kg
    double N_vdot = 1.93;    // kg m
    double N_rdot = -4.88;   // kg m^2/rad
    double N_ur = -3.93;     // kg m/rad
    double N_uud = -6.15;    // N_{uu delta}, kg/rad
};

struct ModelMatrices {
    Mat3 M;   // inertia incl. added mass, constant
    Mat3 C;   // Coriolis-centripetal, skew-symmetric
    Mat3 D;   // damping
    Mat32 G;  // input map
};

/// Clamp into [-bound, bound]. Throws NumericError on non-finite value.
double saturate(double value, double bound);

ControlInput saturate(const ControlInput& tau, double thrust_limit = kThrustLimit,
                      double rudder_limit = kRudderLimit);

/// Body-to-earth rotation about the z axis.
Mat3 transform(double psi);

/// Wrap an angle into [-pi, pi].
double wrap_angle(double angle);

Mat3 inertia_matrix(const ModelCoefficients& k);

/// Throws ModelError if |det M| < 1e-9.
ModelMatrices build_matrices(const ModelCoefficients& k, const Vec3& phi);

/// Coefficients bundled with the precomputed inverse of M.
class VehicleModel {
public:
    explicit VehicleModel(ModelCoefficients coeffs = {});

    const ModelCoefficients& coefficients() const { return coeffs_; }
    const Mat3& inertia_inverse() const { return M_inv_; }

    /// (eta_dot, phi_dot) for an already saturated input.
    Vec6 derivative(const VehicleState& state, const ControlInput& tau) const;

    /// One explicit Euler step of length Ts; yaw re-wrapped.
    VehicleState step(const VehicleState& state, const ControlInput& tau, double Ts) const;

private:
    ModelCoefficients coeffs_;
    Mat3 M_inv_;
};

}  // namespace mpqdpg::dynamics
