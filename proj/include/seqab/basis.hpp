#pragma once

#include <Eigen/Dense>
#include <vector>

namespace seqab {

// Feature map for the linear Q-function approximation. The polynomial kind
// maps a d-dimensional state to (1, s1, s1^2, ..., s1^J, ..., sd, ..., sd^J),
// q = d*J + 1 entries. The constant kind is the q = 1 intercept-only map,
// useful for closed-form checks.
struct BasisSpec {
  enum class Kind { polynomial, constant };
  Kind kind = Kind::polynomial;
  int degree = 4;     // J, powers per coordinate (polynomial kind)
  int state_dim = 2;  // d

  int q() const {
    return kind == Kind::constant ? 1 : state_dim * degree + 1;
  }
  void validate() const;
};

// Reference measure over initial states, represented empirically: either an
// explicit sample set or a single atom.
struct ReferenceDistribution {
  enum class Kind { sample_set, point_mass };
  Kind kind = Kind::sample_set;
  std::vector<Eigen::VectorXd> samples;  // sample_set: one or more states
  Eigen::VectorXd point;                 // point_mass: the atom

  // Default Monte-Carlo draw count when a simulator supplies the measure.
  static constexpr int default_sample_count = 100000;
};

// Contrast vector u = (-g, g) with g the reference-measure average of the
// feature map; tau = u . (beta0, beta1) = g . (beta1 - beta0).
struct ContrastVector {
  Eigen::VectorXd u;  // length 2q; first half is the exact negation of the second

  Eigen::VectorXd g() const { return u.tail(u.size() / 2); }
};

// Evaluate the feature map at a state. Throws std::invalid_argument on a
// dimension mismatch.
Eigen::VectorXd basis_eval(const BasisSpec& spec, const Eigen::VectorXd& s);

// Average the feature map over the reference measure and assemble u.
// Throws std::invalid_argument on an empty sample set or dimension mismatch.
ContrastVector compute_contrast(const BasisSpec& spec,
                                const ReferenceDistribution& g);

}  // namespace seqab
