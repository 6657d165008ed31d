#pragma once

#include <Eigen/Core>

namespace bsa {

template <int Rows, typename Scalar = double>
using Vec = Eigen::Matrix<Scalar, Rows, 1>;

template <int Rows, int Cols = Rows, typename Scalar = double>
using Mat = Eigen::Matrix<Scalar, Rows, Cols>;

template <typename Scalar = double>
using VecX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar = double>
using MatX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

using Vec2 = Vec<2>;
using Vec4 = Vec<4>;
using Mat2 = Mat<2>;
using Mat4 = Mat<4>;

// State layout shared by the ideal and frictional BSA models:
// x = (theta1, theta2, psi1, psi2, q1, q2, psidot1, psidot2, qdot1, qdot2).
namespace bsa_index {
inline constexpr int kTheta = 0;
inline constexpr int kXi = 2;
inline constexpr int kPsi = 2;
inline constexpr int kQ = 4;
inline constexpr int kXiDot = 6;
inline constexpr int kPsiDot = 6;
inline constexpr int kQDot = 8;
inline constexpr int kStateSize = 10;
inline constexpr int kInputSize = 2;
}  // namespace bsa_index

// VSA state layout: x = (theta1, theta2, k1, k2, q1, q2, qdot1, qdot2),
// input u = (u_theta1, u_theta2, u_k1, u_k2).
namespace vsa_index {
inline constexpr int kTheta = 0;
inline constexpr int kStiffness = 2;
inline constexpr int kQ = 4;
inline constexpr int kQDot = 6;
inline constexpr int kStateSize = 8;
inline constexpr int kInputSize = 4;
}  // namespace vsa_index

using BsaVector = Vec<bsa_index::kStateSize>;
using VsaVector = Vec<vsa_index::kStateSize>;

}  // namespace bsa
