#include "vesselreg/tps.hpp"

#include <vector>

namespace vesselreg {

namespace {

Eigen::Matrix<double, 4, 3> affine_fit(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  const Eigen::Index m = src.cols();
  if (m == 1) {
    Eigen::Matrix<double, 4, 3> A = Eigen::Matrix<double, 4, 3>::Zero();
    A.topRows<3>().setIdentity();
    A.row(3) = (dst.col(0) - src.col(0)).transpose();
    return A;
  }
  Eigen::MatrixXd lhs(m, 4);
  lhs.leftCols<3>() = src.transpose();
  lhs.col(3).setOnes();
  // Rank-revealing least squares copes with collinear/coplanar sources.
  return lhs.colPivHouseholderQr().solve(dst.transpose());
}

}  // namespace

ThinPlateSpline3D ThinPlateSpline3D::fit(const Eigen::Matrix3Xd& control_src,
                                         const Eigen::Matrix3Xd& control_dst) {
  if (control_src.cols() == 0 || control_src.cols() != control_dst.cols()) {
    throw Error(errc::singular_system, "control point counts invalid");
  }

  // Collapse exact duplicate sources; contradictory duplicates cannot be
  // interpolated.
  std::vector<int> keep;
  for (Eigen::Index i = 0; i < control_src.cols(); ++i) {
    bool dup = false;
    for (int k : keep) {
      if ((control_src.col(i) - control_src.col(k)).norm() <= 1e-12) {
        if ((control_dst.col(i) - control_dst.col(k)).norm() > 1e-9) {
          throw Error(errc::singular_system, "duplicate control sources with different targets");
        }
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(static_cast<int>(i));
  }
  const int m = static_cast<int>(keep.size());
  Eigen::Matrix3Xd src(3, m), dst(3, m);
  for (int i = 0; i < m; ++i) {
    src.col(i) = control_src.col(keep[i]);
    dst.col(i) = control_dst.col(keep[i]);
  }

  ThinPlateSpline3D tps;
  tps.centers_ = src;

  // The bordered system is singular for coplanar sources even when LU's
  // pivot threshold says otherwise; rank-check the polynomial block first.
  bool full_rank_poly = false;
  if (m >= 4) {
    Eigen::MatrixXd poly(m, 4);
    poly.col(0).setOnes();
    poly.rightCols<3>() = src.transpose();
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(poly);
    qr.setThreshold(1e-7);
    full_rank_poly = qr.rank() == 4;
  }

  if (m >= 4 && full_rank_poly) {
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m + 4, m + 4);
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) {
        const double r = (src.col(i) - src.col(j)).norm();
        system(i, j) = r;
        system(j, i) = r;
      }
      system(i, m) = 1.0;
      system.block<1, 3>(i, m + 1) = src.col(i).transpose();
      system(m, i) = 1.0;
      system.block<3, 1>(m + 1, i) = src.col(i);
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 4, 3);
    rhs.topRows(m) = dst.transpose();

    Eigen::FullPivLU<Eigen::MatrixXd> lu(system);
    if (lu.isInvertible()) {
      const Eigen::MatrixXd sol = lu.solve(rhs);
      tps.weights_ = sol.topRows(m);
      tps.affine_.row(3) = sol.row(m);             // constant
      tps.affine_.topRows<3>() = sol.bottomRows(3);  // linear
      return tps;
    }
    // Coplanar or otherwise rank-deficient: fall through to affine.
  }

  tps.affine_only_ = true;
  const auto A = affine_fit(src, dst);
  tps.affine_.topRows<3>() = A.topRows<3>();
  tps.affine_.row(3) = A.row(3);
  tps.weights_ = Eigen::MatrixXd::Zero(m, 3);
  return tps;
}

Eigen::Vector3d ThinPlateSpline3D::apply(const Eigen::Vector3d& query) const {
  Eigen::Vector3d out =
      affine_.topRows<3>().transpose() * query + affine_.row(3).transpose();
  if (!affine_only_) {
    for (Eigen::Index i = 0; i < centers_.cols(); ++i) {
      const double r = (query - centers_.col(i)).norm();
      out += r * weights_.row(i).transpose();
    }
  }
  return out;
}

Eigen::Matrix3Xd ThinPlateSpline3D::warp(const Eigen::Matrix3Xd& queries) const {
  Eigen::Matrix3Xd out(3, queries.cols());
  for (Eigen::Index i = 0; i < queries.cols(); ++i) out.col(i) = apply(queries.col(i));
  return out;
}

Eigen::Matrix3Xd tps_warp_3d(const Eigen::Matrix3Xd& control_src,
                             const Eigen::Matrix3Xd& control_dst,
                             const Eigen::Matrix3Xd& queries) {
  return ThinPlateSpline3D::fit(control_src, control_dst).warp(queries);
}

}  // namespace vesselreg
