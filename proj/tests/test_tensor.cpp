#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "tubal/tensor.hpp"
#include "tubal/tsvd.hpp"

namespace {

using namespace tubal;
using oracle::Complex;

double spectral_max_diff(const SpectralTensor3& a, const SpectralTensor3& b) {
  double m = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) m = std::max(m, std::abs(a[n] - b[n]));
  return m;
}

TEST(Layout, OffsetIsFirstIndexFastest) {
  Tensor3 a(3, 4, 2);
  for (std::size_t n = 0; n < a.size(); ++n) a[n] = static_cast<double>(n);
  EXPECT_EQ(a(1, 2, 1), static_cast<double>(1 + 3 * (2 + 4 * 1)));
  EXPECT_EQ(a.slice(1)(2, 3), a(2, 3, 1));
  // 1-based (i, j, k) in documentation maps to 0-based (i-1, j-1, k-1) here.
  EXPECT_EQ(a.offset(2, 3, 1), a.size() - 1);
}

TEST(Layout, RejectsZeroDimsAndLengthMismatch) {
  EXPECT_THROW(Tensor3(0, 2, 2), Error);
  try {
    Tensor3 bad(Dims{2, 2, 2}, std::vector<double>(7));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(Dft, ImpulseTubeIsAllOnes) {
  Tensor3 a(1, 1, 4);
  a(0, 0, 0) = 1.0;
  const auto f = dft_mode3(a);
  for (std::size_t k = 0; k < 4; ++k) EXPECT_NEAR(std::abs(f(0, 0, k) - Complex(1.0, 0.0)), 0.0, 1e-15);
}

TEST(Dft, ZeroTensorStaysZero) {
  const auto f = dft_mode3(Tensor3(2, 3, 5));
  for (auto z : f.data()) EXPECT_EQ(z, Complex(0.0, 0.0));
}

TEST(Dft, MatchesNaiveSummationAndRoundTrips) {
  const Tensor3 a = oracle::gaussian({3, 3, 5}, 11);
  EXPECT_LT(spectral_max_diff(dft_mode3(a), oracle::naive_dft(a)), 1e-12);
  EXPECT_LE(frobenius(idft_mode3(dft_mode3(a)) - a), 1e-12 * frobenius(a));
}

TEST(Idft, AllOnesIsImpulse) {
  SpectralTensor3 f(1, 1, 4);
  for (auto& z : f.data()) z = 1.0;
  const Tensor3 a = idft_mode3(f);
  EXPECT_NEAR(a(0, 0, 0), 1.0, 1e-15);
  for (std::size_t k = 1; k < 4; ++k) EXPECT_NEAR(a(0, 0, k), 0.0, 1e-15);
}

TEST(Idft, InvertsNaiveDft) {
  const Tensor3 a = oracle::gaussian({2, 2, 3}, 12);
  EXPECT_LE(frobenius(idft_mode3(oracle::naive_dft(a)) - a), 1e-12 * frobenius(a));
}

TEST(Idft, BrokenSymmetryIsRejected) {
  SpectralTensor3 f = dft_mode3(oracle::gaussian({2, 2, 4}, 13));
  f(0, 0, 1) += Complex(1.0, 0.0);
  try {
    (void)idft_mode3(f);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::imaginary_residue_too_large);
  }
}

TEST(Dft, ConjugateSymmetryForOddAndEvenDepth) {
  for (std::size_t n3 : {1u, 2u, 5u, 6u, 9u}) {
    const Tensor3 a = oracle::gaussian({3, 2, n3}, 100 + n3);
    const auto f = dft_mode3(a);
    const double scale = frobenius(a) * std::sqrt(static_cast<double>(n3));
    for (std::size_t k = 1; k < n3; ++k)
      for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t i = 0; i < 3; ++i)
          EXPECT_LE(std::abs(f(i, j, k) - std::conj(f(i, j, n3 - k))), 1e-10 * scale);
  }
}

TEST(TProduct, IdentityIsNeutral) {
  const Tensor3 b = oracle::gaussian({3, 4, 5}, 21);
  EXPECT_LE(frobenius(t_product(identity_tensor(3, 5), b) - b), 1e-12 * frobenius(b));
  EXPECT_LE(frobenius(t_product(b, identity_tensor(4, 5)) - b), 1e-12 * frobenius(b));
}

TEST(TProduct, TubesConvolveCircularly) {
  Tensor3 a(1, 1, 2);
  Tensor3 b(1, 1, 2);
  a(0, 0, 0) = 2.0;
  a(0, 0, 1) = 3.0;
  b(0, 0, 0) = 5.0;
  b(0, 0, 1) = 7.0;
  const Tensor3 c = t_product(a, b);
  EXPECT_NEAR(c(0, 0, 0), 2.0 * 5.0 + 3.0 * 7.0, 1e-12);
  EXPECT_NEAR(c(0, 0, 1), 2.0 * 7.0 + 3.0 * 5.0, 1e-12);
}

TEST(TProduct, MatchesConvolutionOracle) {
  const Tensor3 a = oracle::gaussian({3, 2, 4}, 22);
  const Tensor3 b = oracle::gaussian({2, 5, 4}, 23);
  const Tensor3 ref = oracle::naive_t_product(a, b);
  EXPECT_LE(frobenius(t_product(a, b) - ref), 1e-10 * frobenius(ref));
}

TEST(TProduct, InnerDimensionMismatchThrows) {
  try {
    (void)t_product(Tensor3(3, 2, 4), Tensor3(3, 2, 4));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
  EXPECT_THROW((void)t_product(Tensor3(3, 2, 4), Tensor3(2, 2, 3)), Error);
}

TEST(TProduct, AssociativeAndBilinear) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const std::size_t n3 = 1 + s % 6;
    const Tensor3 a = oracle::gaussian({3, 4, n3}, 1000 + s);
    const Tensor3 b = oracle::gaussian({4, 2, n3}, 2000 + s);
    const Tensor3 b2 = oracle::gaussian({4, 2, n3}, 2500 + s);
    const Tensor3 c = oracle::gaussian({2, 5, n3}, 3000 + s);
    const Tensor3 left = t_product(t_product(a, b), c);
    const Tensor3 right = t_product(a, t_product(b, c));
    EXPECT_LE(frobenius(left - right), 1e-9 * frobenius(left));
    const Tensor3 lin = t_product(a, 2.0 * b - 0.5 * b2);
    const Tensor3 ref = 2.0 * t_product(a, b) - 0.5 * t_product(a, b2);
    EXPECT_LE(frobenius(lin - ref), 1e-9 * frobenius(ref));
  }
}

TEST(TProduct, ReducesToMatrixProduct) {
  const Tensor3 a = oracle::gaussian({4, 3, 1}, 24);
  const Tensor3 b = oracle::gaussian({3, 5, 1}, 25);
  const Eigen::MatrixXd ref = a.slice(0) * b.slice(0);
  EXPECT_LE((t_product(a, b).slice(0) - ref).norm(), 1e-10 * ref.norm());
}

TEST(ConjTranspose, MatrixCaseIsTranspose) {
  const Tensor3 a = oracle::gaussian({3, 4, 1}, 31);
  const Tensor3 t = conj_transpose(a);
  ASSERT_EQ(t.dims(), (Dims{4, 3, 1}));
  EXPECT_EQ(Eigen::MatrixXd(t.slice(0)), Eigen::MatrixXd(a.slice(0).transpose()));
}

TEST(ConjTranspose, ReversesSlicesAndIsInvolution) {
  const Tensor3 a = oracle::gaussian({3, 4, 5}, 32);
  const Tensor3 t = conj_transpose(a);
  EXPECT_EQ(Eigen::MatrixXd(t.slice(0)), Eigen::MatrixXd(a.slice(0).transpose()));
  for (std::size_t k = 1; k < 5; ++k)
    EXPECT_EQ(Eigen::MatrixXd(t.slice(k)), Eigen::MatrixXd(a.slice(5 - k).transpose()));
  EXPECT_EQ(conj_transpose(t), a);
}

TEST(ConjTranspose, SpectralSlicesAreAdjoints) {
  const Tensor3 a = oracle::gaussian({3, 4, 6}, 33);
  const auto fa = oracle::naive_dft(a);
  const auto ft = oracle::naive_dft(conj_transpose(a));
  for (std::size_t k = 0; k < 6; ++k) {
    const Eigen::MatrixXcd diff = ft.slice(k) - fa.slice(k).adjoint();
    EXPECT_LE(diff.norm(), 1e-10 * frobenius(a) * std::sqrt(6.0));
  }
}

TEST(ConjTranspose, ReversalLaw) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const Tensor3 a = oracle::gaussian({3, 4, 5}, 40 + s);
    const Tensor3 b = oracle::gaussian({4, 2, 5}, 60 + s);
    const Tensor3 lhs = conj_transpose(t_product(a, b));
    const Tensor3 rhs = t_product(conj_transpose(b), conj_transpose(a));
    EXPECT_LE(frobenius(lhs - rhs), 1e-10 * frobenius(lhs));
  }
}

TEST(Identity, FirstSliceOnly) {
  const Tensor3 id = identity_tensor(2, 3);
  EXPECT_EQ(Eigen::MatrixXd(id.slice(0)), Eigen::MatrixXd::Identity(2, 2));
  EXPECT_EQ(Eigen::MatrixXd(id.slice(1)), Eigen::MatrixXd::Zero(2, 2));
  EXPECT_EQ(Eigen::MatrixXd(id.slice(2)), Eigen::MatrixXd::Zero(2, 2));
  const auto f = dft_mode3(id);
  for (std::size_t k = 0; k < 3; ++k)
    EXPECT_LE((Eigen::MatrixXcd(f.slice(k)) - Eigen::MatrixXcd::Identity(2, 2)).norm(), 1e-15);
}

TEST(InnerProduct, BasicIdentities) {
  const Tensor3 a = oracle::gaussian({3, 3, 4}, 51);
  EXPECT_NEAR(inner_product(a, a), frobenius(a) * frobenius(a), 1e-12 * inner_product(a, a));
  EXPECT_EQ(inner_product(basis(BasisSpec::unit(0, 0, 0, a.dims())), a), a(0, 0, 0));
  EXPECT_THROW((void)inner_product(a, Tensor3(3, 3, 3)), Error);
}

TEST(InnerProduct, SpectralSideAgrees) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const Dims d{2 + s % 3, 3 + s % 2, 1 + s % 7};
    const Tensor3 a = oracle::gaussian(d, 70 + s);
    const Tensor3 b = oracle::gaussian(d, 90 + s);
    const auto fa = oracle::naive_dft(a);
    const auto fb = oracle::naive_dft(b);
    double acc = 0.0;
    for (std::size_t n = 0; n < fa.size(); ++n) acc += (std::conj(fa[n]) * fb[n]).real();
    acc /= static_cast<double>(d.n3);
    EXPECT_LE(std::abs(inner_product(a, b) - acc), 1e-10 * frobenius(a) * frobenius(b));
    EXPECT_LE(std::abs(spectral_inner_product(dft_mode3(a), dft_mode3(b)) - inner_product(a, b)),
              1e-10 * frobenius(a) * frobenius(b));
  }
}

TEST(Norm, ZeroAndSingleEntry) {
  const Tensor3 z(2, 2, 2);
  for (auto kind : {NormKind::l1, NormKind::linf, NormKind::fro}) EXPECT_EQ(norm(z, kind), 0.0);
  Tensor3 one(2, 2, 2);
  one(1, 0, 1) = 3.0;
  for (auto kind : {NormKind::l1, NormKind::linf, NormKind::fro}) EXPECT_DOUBLE_EQ(norm(one, kind), 3.0);
}

TEST(Norm, MatchesNaiveSums) {
  const Tensor3 a = oracle::gaussian({2, 2, 2}, 52);
  double ss = 0.0;
  double l1 = 0.0;
  double mx = 0.0;
  for (double x : a.values()) {
    ss += x * x;
    l1 += std::abs(x);
    mx = std::max(mx, std::abs(x));
  }
  EXPECT_NEAR(norm(a, NormKind::fro), std::sqrt(ss), 1e-12);
  EXPECT_NEAR(norm(a, NormKind::l1), l1, 1e-12);
  EXPECT_EQ(norm(a, NormKind::linf), mx);
}

TEST(SpectralNorm, MatrixCase) {
  const Tensor3 a = oracle::gaussian({5, 3, 1}, 53);
  const double ref = oracle::singular_values(Eigen::MatrixXd(a.slice(0)))(0);
  EXPECT_NEAR(spectral_norm(a), ref, 1e-10 * ref);
}

TEST(SpectralNorm, IdentityIsOne) { EXPECT_NEAR(spectral_norm(identity_tensor(4, 6)), 1.0, 1e-12); }

TEST(SpectralNorm, MatchesPowerIteration) {
  const Tensor3 a = oracle::gaussian({4, 3, 5}, 54);
  const auto f = oracle::naive_dft(a);
  double ref = 0.0;
  for (std::size_t k = 0; k < 5; ++k) ref = std::max(ref, oracle::power_top_singular(f.slice(k)));
  EXPECT_NEAR(spectral_norm(a), ref, 1e-8 * ref);
}

TEST(Basis, UnitEntryPosition) {
  const Dims d{3, 4, 2};
  // documented 1-based (3, 4, 2) is 0-based (2, 3, 1)
  const Tensor3 e = basis(BasisSpec::unit(2, 3, 1, d));
  EXPECT_EQ(e(2, 3, 1), 1.0);
  EXPECT_EQ(norm(e, NormKind::l1), 1.0);
}

TEST(Basis, ColumnTubeRowChainIsUnit) {
  const Dims d{3, 4, 5};
  for (std::size_t i = 0; i < d.n1; ++i)
    for (std::size_t j = 0; j < d.n2; ++j)
      for (std::size_t k = 0; k < d.n3; ++k) {
        const Tensor3 ci = basis(BasisSpec::column(i, d));
        const Tensor3 cj = basis(BasisSpec::column(j, Dims{d.n2, d.n1, d.n3}));
        const Tensor3 tk = basis(BasisSpec::tube(k, d));
        const Tensor3 chain = t_product(t_product(ci, tk), conj_transpose(cj));
        EXPECT_LE(frobenius(chain - basis(BasisSpec::unit(i, j, k, d))), 1e-12);
      }
}

TEST(Basis, DecompositionReconstructs) {
  const Tensor3 a = oracle::gaussian({2, 3, 3}, 55);
  Tensor3 sum(a.dims());
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) {
        const Tensor3 e = basis(BasisSpec::unit(i, j, k, a.dims()));
        sum += inner_product(e, a) * e;
      }
  EXPECT_EQ(sum, a);
}

TEST(Basis, OutOfRangeThrows) {
  const Dims d{3, 4, 2};
  for (const auto& spec : {BasisSpec::unit(3, 0, 0, d), BasisSpec::unit(0, 4, 0, d), BasisSpec::unit(0, 0, 2, d),
                           BasisSpec::column(3, d), BasisSpec::tube(2, d)}) {
    try {
      (void)basis(spec);
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), Errc::index_out_of_bounds);
    }
  }
}

TEST(Orthogonality, IdentityScaledAndTsvdFactor) {
  EXPECT_TRUE(is_orthogonal(identity_tensor(3, 4), 1e-12));
  EXPECT_FALSE(is_orthogonal(2.0 * identity_tensor(3, 4), 1e-3));
  const auto f = tsvd(oracle::gaussian({5, 5, 6}, 56));
  EXPECT_TRUE(is_orthogonal(f.u, 1e-8));
  EXPECT_TRUE(is_orthogonal(f.v, 1e-8));
  try {
    (void)is_orthogonal(Tensor3(3, 2, 2), 1e-8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
}

TEST(FDiagonal, Cases) {
  EXPECT_TRUE(is_f_diagonal(identity_tensor(3, 4), 1e-10));
  EXPECT_FALSE(is_f_diagonal(basis(BasisSpec::unit(0, 1, 0, {3, 3, 2})), 1e-10));
  EXPECT_TRUE(is_f_diagonal(tsvd(oracle::gaussian({4, 6, 5}, 57)).s, 1e-10));
}

TEST(Finite, DetectsNan) {
  Tensor3 a(2, 2, 2);
  EXPECT_TRUE(all_finite(a));
  a(1, 1, 1) = std::nan("");
  EXPECT_FALSE(all_finite(a));
}

}  // namespace
