#include "nmss/tensors.hpp"

#ifdef NMSS_HAVE_LAPACKE
#include <lapacke.h>
#endif

namespace nmss::detail {

#ifdef NMSS_HAVE_LAPACKE
bool lapack_svd(const ComplexMatrix& m, ComplexMatrix& u, Eigen::VectorXd& s, ComplexMatrix& v) {
  const auto rows = static_cast<lapack_int>(m.rows());
  const auto cols = static_cast<lapack_int>(m.cols());
  const lapack_int k = std::min(rows, cols);
  ComplexMatrix a = m;  // destroyed by the driver
  ComplexMatrix vt(k, cols);
  u.resize(rows, k);
  s.resize(k);
  auto* pa = reinterpret_cast<lapack_complex_double*>(a.data());
  auto* pu = reinterpret_cast<lapack_complex_double*>(u.data());
  auto* pvt = reinterpret_cast<lapack_complex_double*>(vt.data());
  lapack_int info = LAPACKE_zgesdd(LAPACK_COL_MAJOR, 'S', rows, cols, pa, rows, s.data(), pu, rows, pvt, k);
  if (info != 0) {
    // gesdd occasionally fails to converge; the QR-iteration driver is slower but sturdier.
    a = m;
    pa = reinterpret_cast<lapack_complex_double*>(a.data());
    Eigen::VectorXd superb(std::max<lapack_int>(k - 1, 1));
    info = LAPACKE_zgesvd(LAPACK_COL_MAJOR, 'S', 'S', rows, cols, pa, rows, s.data(), pu, rows, pvt, k,
                          superb.data());
    if (info != 0) return false;
  }
  v = vt.adjoint();
  return true;
}
#else
bool lapack_svd(const ComplexMatrix&, ComplexMatrix&, Eigen::VectorXd&, ComplexMatrix&) { return false; }
#endif

}  // namespace nmss::detail
