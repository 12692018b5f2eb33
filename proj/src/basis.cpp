#include "seqab/basis.hpp"

#include <stdexcept>

namespace seqab {

void BasisSpec::validate() const {
  if (kind == Kind::polynomial && degree < 1)
    throw std::invalid_argument("basis: degree must be >= 1");
  if (state_dim < 1)
    throw std::invalid_argument("basis: state_dim must be >= 1");
}

Eigen::VectorXd basis_eval(const BasisSpec& spec, const Eigen::VectorXd& s) {
  if (s.size() != spec.state_dim)
    throw std::invalid_argument("basis_eval: state dimension mismatch");
  Eigen::VectorXd phi(spec.q());
  phi(0) = 1.0;
  if (spec.kind == BasisSpec::Kind::constant) return phi;
  int idx = 1;
  for (int i = 0; i < spec.state_dim; ++i) {
    double pw = 1.0;
    for (int j = 0; j < spec.degree; ++j) {
      pw *= s(i);
      phi(idx++) = pw;
    }
  }
  return phi;
}

ContrastVector compute_contrast(const BasisSpec& spec,
                                const ReferenceDistribution& g) {
  const int q = spec.q();
  Eigen::VectorXd gbar = Eigen::VectorXd::Zero(q);
  if (g.kind == ReferenceDistribution::Kind::point_mass) {
    gbar = basis_eval(spec, g.point);
  } else {
    if (g.samples.empty())
      throw std::invalid_argument("compute_contrast: empty sample set");
    for (const auto& s : g.samples) gbar += basis_eval(spec, s);
    gbar /= static_cast<double>(g.samples.size());
  }
  ContrastVector cv;
  cv.u.resize(2 * q);
  cv.u.head(q) = -gbar;  // negating the same vector keeps the halves
  cv.u.tail(q) = gbar;   // antisymmetric bit-exactly
  return cv;
}

}  // namespace seqab
