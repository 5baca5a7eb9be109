#include <gtest/gtest.h>

#include <random>

#include "lqgan/analysis.hpp"
#include "lqgan/dynamics.hpp"

using namespace lqgan;

namespace {

Mat m2(double a, double b, double c, double d) {
    Mat m(2, 2);
    m << a, b, c, d;
    return m;
}

RegionBox positive_a_box(double w2_range, double a_hi) {
    Vec lo(2), hi(2);
    lo << -w2_range, 0.0;
    hi << w2_range, a_hi;
    return RegionBox::for_view(SubsystemView::w2a(1), lo, hi, 1e-2);
}

}  // namespace

TEST(Hurwitz, Rotation) {
    const HurwitzResult r = hurwitz_check(m2(0, 1, -1, 0));
    EXPECT_FALSE(r.is_hurwitz);
    EXPECT_NEAR(r.min_real_part, 0.0, 1e-15);
    EXPECT_TRUE(hurwitz_check(m2(1, 4, -1, 1)).is_hurwitz);
}

TEST(Hurwitz, RejectsNonFinite) {
    EXPECT_THROW(hurwitz_check(m2(std::nan(""), 0, 0, 1)), InvalidArgument);
}

TEST(Psd, Grades) {
    EXPECT_EQ(grade_from_psd(0.5, 0.5, 1e-8), Grade::Strongly);
    EXPECT_EQ(grade_from_psd(0.1, 0.5, 1e-8), Grade::Strictly);
    EXPECT_EQ(grade_from_psd(-1e-10, 0.0, 1e-8), Grade::Monotone);
    EXPECT_EQ(grade_from_psd(-1.0, 0.0, 1e-8), Grade::Violated);
}

TEST(Psd, LinOnW1BIsBetaPlusGamma) {
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-3, 3), c(0, 2);
    for (int t = 0; t < 200; ++t) {
        Params p;
        p.alpha = u(rng);
        p.beta = c(rng);
        p.gamma = c(rng);
        const MapSpec s = MapSpec::make(MapId::F_LIN, SubsystemView::w1b(1), p);
        const Mat j = jacobian(s, GanState::scalar(0, u(rng), 1, u(rng)), DataMoments::scalar(u(rng), 1)).j;
        EXPECT_EQ(psd_grade(j), *p.beta + *p.gamma);
    }
}

TEST(ComplementBasis, OrthonormalAndOrthogonal) {
    Vec f(4);
    f << 0.3, -1, 2, 0.5;
    const Mat q = complement_basis(f);
    ASSERT_EQ(q.cols(), 3);
    EXPECT_LT((q.transpose() * q - Mat::Identity(3, 3)).norm(), 1e-12);
    EXPECT_LT((q.transpose() * f).norm(), 1e-12);
}

TEST(ConditionA, RescaledMapsHoldOnPositiveA) {
    const DataMoments m = DataMoments::scalar(0.4, 1.7);
    for (MapId id : {MapId::F_CC_PRIME, MapId::F_EG_PRIME}) {
        const MapSpec s = MapSpec::make(id, SubsystemView::w2a(1));
        const CertReport r = condition_a_probe(s, equilibrium(m), m, positive_a_box(5, 5), 2000, 0, 3);
        EXPECT_NE(r.grade, Grade::Violated) << to_string(id) << " min " << r.min_value;
    }
}

TEST(ConditionA, PlainFieldViolates) {
    const DataMoments m = DataMoments::scalar(0, 1);
    const MapSpec s = MapSpec::make(MapId::F, SubsystemView::w2a(1));
    const CertReport r = condition_a_probe(s, equilibrium(m), m, positive_a_box(2, 3), 500, 0, 3);
    ASSERT_EQ(r.grade, Grade::Violated);
    ASSERT_TRUE(r.witness);
    // The witness replays to the reported value and lies orthogonal to F.
    const Vec f = evaluate_sub(s, equilibrium(m), r.witness->points[0], m, false).value;
    EXPECT_LT(std::abs(f.dot(r.witness->direction)), 1e-10 * (1 + f.norm()));
    EXPECT_LT(r.witness->value, 0.0);
}

TEST(ConditionA, SampledDirectionsNeverBeatExactMinimum) {
    const DataMoments m = DataMoments::scalar(0, 1);
    const MapSpec s = MapSpec::make(MapId::F_CON, SubsystemView::full(1));
    Vec lo = Vec::Constant(4, -1), hi = Vec::Constant(4, 1);
    const RegionBox box = RegionBox::for_view(s.view, lo, hi);
    const CertReport exact = condition_a_probe(s, GanState::zeros(1), m, box, 300, 0, 5);
    const CertReport sampled = condition_a_probe(s, GanState::zeros(1), m, box, 300, 16, 5);
    EXPECT_GE(sampled.min_value, exact.min_value - 1e-9);
}

TEST(ConditionA, IndependentOfWorkerCount) {
    const DataMoments m = DataMoments::scalar(0, 1);
    const MapSpec s = MapSpec::make(MapId::F_EG, SubsystemView::w2a(1));
    ProbeOptions one, three;
    three.workers = 3;
    const RegionBox box = positive_a_box(2, 3);
    const CertReport a = condition_a_probe(s, equilibrium(m), m, box, 1000, 0, 9, one);
    const CertReport b = condition_a_probe(s, equilibrium(m), m, box, 1000, 0, 9, three);
    EXPECT_EQ(a.min_value, b.min_value);
    EXPECT_EQ(a.samples, 1000);
}

TEST(ConditionB, CcPrimeIsPseudoConsistent) {
    const DataMoments m = DataMoments::scalar(0, 2);
    const MapSpec s = MapSpec::make(MapId::F_CC_PRIME, SubsystemView::w2a(1));
    const CertReport r = condition_b_probe(s, equilibrium(m), m, positive_a_box(3, 4), 2000, 1);
    EXPECT_EQ(r.grade, Grade::PseudoConsistent);
}

TEST(Certify, W1BCurlIsStronglyMonotone) {
    const DataMoments m = DataMoments::scalar(1, 1);
    const MapSpec s = MapSpec::make(MapId::F_CC, SubsystemView::w1b(1));
    Vec lo = Vec::Constant(2, -3), hi = Vec::Constant(2, 3);
    const CertReport r = certify(s, equilibrium(m), m, RegionBox::make(lo, hi), 200, 0, 1.0);
    EXPECT_EQ(r.grade, Grade::Strongly);
}

TEST(Certify, PlainW1BIsMonotoneOnly) {
    const DataMoments m = DataMoments::scalar(1, 1);
    const MapSpec s = MapSpec::make(MapId::F, SubsystemView::w1b(1));
    Vec lo = Vec::Constant(2, -3), hi = Vec::Constant(2, 3);
    EXPECT_EQ(certify(s, equilibrium(m), m, RegionBox::make(lo, hi), 100, 0).grade, Grade::Monotone);
}

TEST(Region, Validation) {
    Vec lo(2), hi(2);
    lo << 0, 0;
    hi << 1, 0;
    EXPECT_THROW(RegionBox::make(lo, hi), InvalidArgument);
    hi << 1, 1;
    EXPECT_THROW(condition_a_probe(MapSpec::make(MapId::F, SubsystemView::w2a(2)), GanState::zeros(2),
                                   DataMoments::make(Vec::Zero(2), Mat::Identity(2, 2)), RegionBox::make(lo, hi), 10,
                                   0, 0),
                 InvalidArgument);
}

TEST(Region, MaskedCoordinatesStayPositive) {
    Vec lo(2), hi(2);
    lo << -1, -1;
    hi << 1, 1;
    const RegionBox box = RegionBox::for_view(SubsystemView::w2a(1), lo, hi, 1e-3);
    std::mt19937_64 rng(0);
    for (int i = 0; i < 1000; ++i) EXPECT_GE(box.sample(rng)(1), 1e-3);
}

TEST(Affine, GradientFieldHasNoSkewPart) {
    std::mt19937 rng(6);
    std::normal_distribution<double> nd;
    Mat q(5, 5);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j) q(i, j) = nd(rng);
    const Mat h = q * q.transpose();  // Hessian of a quadratic
    const Mat skew = 0.5 * (h - h.transpose()), sym = 0.5 * (h + h.transpose());
    EXPECT_LT(skew.norm(), 1e-10);
    EXPECT_LT((sym + skew - h).norm(), 1e-14);
}

TEST(Affine, CurlPreconditioningMonotoneForNormalFields) {
    std::mt19937 rng(7);
    std::normal_distribution<double> nd;
    for (int t = 0; t < 100; ++t) {
        const int n = 2 + t % 5;
        Mat g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = nd(rng);
        const Mat o = Eigen::HouseholderQR<Mat>(g).householderQ();
        // A polynomial in a normal matrix is normal; conjugate by an orthogonal o.
        Mat k(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) k(i, j) = nd(rng);
        const Mat s = k - k.transpose();
        const Mat base = nd(rng) * Mat::Identity(n, n) + s;
        const Mat j = o * (base + 0.3 * base * base) * o.transpose();
        ASSERT_LT((j * j.transpose() - j.transpose() * j).norm(), 1e-9 * (1 + j.squaredNorm()));
        EXPECT_GE(psd_grade(cc_jacobian(j)), -1e-10 * (1 + j.squaredNorm()));
    }
}

TEST(Fields, EveryMapFixesTheEquilibrium) {
    std::mt19937_64 rng(10);
    for (int t = 0; t < 100; ++t) {
        const int n = 1 + t % 3;
        Mat q(n, n);
        std::normal_distribution<double> nd;
        Vec mu(n);
        for (int i = 0; i < n; ++i) {
            mu(i) = nd(rng);
            for (int j = 0; j < n; ++j) q(i, j) = nd(rng);
        }
        const DataMoments m = DataMoments::make(mu, q * q.transpose() + 0.2 * Mat::Identity(n, n));
        const GanState xs = equilibrium(m);
        for (const auto& [id, name] : map_names()) {
            std::vector<SubsystemView> views;
            if (id == MapId::F_CC_COVROW) {
                if (n >= 2) views = {SubsystemView::cov_row(n, n)};
            } else if (id == MapId::F_ALT || id == MapId::F_UNR) {
                views = {SubsystemView::w1b(n)};
                if (n == 1) views.push_back(SubsystemView::w2a(1));
            } else if (id == MapId::F_CC_PRIME || id == MapId::F_EG_PRIME) {
                views = {SubsystemView::w2a(n)};
            } else {
                views = {SubsystemView::w1b(n), SubsystemView::w2a(n), SubsystemView::full(n)};
            }
            for (const SubsystemView& v : views)
                EXPECT_LT(eval_field(MapSpec::make(id, v), xs, m).norm(), 1e-9) << name << " on " << v.name();
        }
    }
}

TEST(Extragradient, ContractsEveryStepOnW1B) {
    std::mt19937_64 rng(12);
    std::uniform_real_distribution<double> u(-3, 3), step(0.01, 0.99);
    const DataMoments m = DataMoments::scalar(0, 1);
    const MapSpec s = MapSpec::make(MapId::F, SubsystemView::w1b(1));
    for (int t = 0; t < 100; ++t) {
        Vec x(2);
        x << u(rng), u(rng);
        const double h = step(rng);
        const Vec y = step_extragradient(s, GanState::zeros(1), x, m, h, h);
        EXPECT_LT(y.norm() / x.norm(), 1.0);
    }
}

TEST(Hierarchy, StrongGradeImpliesNoConditionAViolation) {
    const DataMoments m = DataMoments::scalar(0.5, 2);
    const MapSpec s = MapSpec::make(MapId::F_CC_PRIME, SubsystemView::w2a(1));
    const RegionBox box = positive_a_box(3, 4);
    const CertReport c = certify(s, equilibrium(m), m, box, 500, 2, 0.5);
    ASSERT_EQ(c.grade, Grade::Strongly);
    EXPECT_NE(condition_a_probe(s, equilibrium(m), m, box, 500, 0, 2).grade, Grade::Violated);
}
