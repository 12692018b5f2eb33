#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "doctest.h"
#include "seqab/basis.hpp"

using namespace seqab;

namespace {

Eigen::VectorXd vec(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<int>(xs.size()));
  int i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

}  // namespace

TEST_CASE("polynomial basis dimension and coordinate-major layout") {
  BasisSpec spec;
  spec.kind = BasisSpec::Kind::polynomial;
  spec.degree = 4;
  spec.state_dim = 2;
  CHECK(spec.q() == 9);

  const Eigen::VectorXd phi = basis_eval(spec, vec({2.0, 3.0}));
  REQUIRE(phi.size() == 9);
  CHECK(phi(0) == 1.0);
  // Powers of the first coordinate, then powers of the second.
  CHECK(phi(1) == 2.0);
  CHECK(phi(2) == 4.0);
  CHECK(phi(3) == 8.0);
  CHECK(phi(4) == 16.0);
  CHECK(phi(5) == 3.0);
  CHECK(phi(6) == 9.0);
  CHECK(phi(7) == 27.0);
  CHECK(phi(8) == 81.0);
}

TEST_CASE("univariate polynomial basis") {
  BasisSpec spec;
  spec.degree = 4;
  spec.state_dim = 1;
  CHECK(spec.q() == 5);
  const Eigen::VectorXd phi = basis_eval(spec, vec({0.5}));
  CHECK(phi(0) == 1.0);
  CHECK(phi(1) == 0.5);
  CHECK(phi(2) == 0.25);
  CHECK(phi(3) == 0.125);
  CHECK(phi(4) == 0.0625);
}

TEST_CASE("constant basis is the lone intercept") {
  BasisSpec spec;
  spec.kind = BasisSpec::Kind::constant;
  spec.state_dim = 3;
  CHECK(spec.q() == 1);
  const Eigen::VectorXd phi = basis_eval(spec, vec({7.0, -2.0, 0.1}));
  REQUIRE(phi.size() == 1);
  CHECK(phi(0) == 1.0);
}

TEST_CASE("basis_eval rejects dimension mismatch") {
  BasisSpec spec;
  spec.degree = 2;
  spec.state_dim = 2;
  CHECK_THROWS_AS(basis_eval(spec, vec({1.0})), std::invalid_argument);
  CHECK_THROWS_AS(basis_eval(spec, vec({1.0, 2.0, 3.0})),
                  std::invalid_argument);
}

TEST_CASE("basis spec validation") {
  BasisSpec spec;
  spec.degree = 0;
  spec.state_dim = 1;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.degree = 1;
  spec.state_dim = 0;
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec.state_dim = 1;
  CHECK_NOTHROW(spec.validate());
  spec.kind = BasisSpec::Kind::constant;
  spec.degree = 0;  // degree is ignored for the constant basis
  CHECK_NOTHROW(spec.validate());
}

TEST_CASE("point-mass contrast stacks -g and g") {
  BasisSpec spec;
  spec.degree = 3;
  spec.state_dim = 2;
  ReferenceDistribution g;
  g.kind = ReferenceDistribution::Kind::point_mass;
  g.point = vec({1.5, -0.5});

  const ContrastVector cv = compute_contrast(spec, g);
  const Eigen::VectorXd phi = basis_eval(spec, g.point);
  REQUIRE(cv.u.size() == 2 * spec.q());
  for (int i = 0; i < spec.q(); ++i) {
    CHECK(cv.u(spec.q() + i) == phi(i));
    // Antisymmetry must hold bit-exactly, not just approximately.
    CHECK(cv.u(i) == -cv.u(spec.q() + i));
  }
  CHECK((cv.g() - phi).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("sample-set contrast averages the evaluated features") {
  BasisSpec spec;
  spec.degree = 2;
  spec.state_dim = 1;
  ReferenceDistribution g;
  g.kind = ReferenceDistribution::Kind::sample_set;
  g.samples = {vec({1.0}), vec({3.0})};

  const ContrastVector cv = compute_contrast(spec, g);
  const Eigen::VectorXd expect =
      0.5 * (basis_eval(spec, g.samples[0]) + basis_eval(spec, g.samples[1]));
  CHECK((cv.g() - expect).lpNorm<Eigen::Infinity>() <= 1e-12);
  for (int i = 0; i < spec.q(); ++i) CHECK(cv.u(i) == -cv.u(spec.q() + i));
}

TEST_CASE("sample-set contrast with many draws stays antisymmetric") {
  BasisSpec spec;
  spec.degree = 4;
  spec.state_dim = 2;
  ReferenceDistribution g;
  g.kind = ReferenceDistribution::Kind::sample_set;
  for (int i = 0; i < 257; ++i)
    g.samples.push_back(vec({0.01 * i - 1.0, 0.03 * i - 3.7}));
  const ContrastVector cv = compute_contrast(spec, g);
  for (int i = 0; i < spec.q(); ++i) CHECK(cv.u(i) == -cv.u(spec.q() + i));
}

TEST_CASE("empty sample set is rejected") {
  BasisSpec spec;
  spec.degree = 1;
  spec.state_dim = 1;
  ReferenceDistribution g;
  g.kind = ReferenceDistribution::Kind::sample_set;
  CHECK_THROWS_AS(compute_contrast(spec, g), std::invalid_argument);
}
