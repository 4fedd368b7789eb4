// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>
#include <complex>

#include "dlczsim/fock.hpp"
#include "dlczsim/rng.hpp"

using namespace dlczsim;
using namespace dlczsim::fock;

namespace {

const ModeLabel A = stokes(Site::L);
const ModeLabel B = stokes(Site::R);

Matrix random_unitary(int dim, TrialRng& rng) {
    Matrix m(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
            m(i, j) = Complex(rng.next_gaussian(), rng.next_gaussian());
    Eigen::HouseholderQR<Matrix> qr(m);
    Matrix q = qr.householderQ();
    return q;
}

DensityOperator random_density(const ModeRegister& reg, TrialRng& rng) {
    Matrix m(reg.dim(), reg.dim());
    for (Eigen::Index i = 0; i < reg.dim(); ++i)
        for (Eigen::Index j = 0; j < reg.dim(); ++j)
            m(i, j) = Complex(rng.next_gaussian(), rng.next_gaussian());
    Matrix rho = m * m.adjoint();
    rho /= rho.trace().real();
    return DensityOperator(reg, rho);
}

} // namespace

TEST_SUITE_BEGIN("fock");

TEST_CASE("two-mode squeezed state: vacuum limit at chi = 0") {
    const PureState s = make_two_mode_squeezed(0.0, 2, A, B);
    const std::array<int, 2> vac{0, 0};
    CHECK(std::abs(s.amplitude(vac) - 1.0) < 1e-15);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
}

TEST_CASE("two-mode squeezed state: chi = 0.04 amplitudes against the geometric series") {
    // oracle: weights (1, sqrt(chi), chi) normalized by hand
    const double chi = 0.04;
    const long double norm2 = 1.0L + 0.04L + 0.0016L;
    const double c0 = static_cast<double>(1.0L / std::sqrt(norm2));

    const PureState s = make_two_mode_squeezed(chi, 2, A, B);
    const std::array<int, 2> n0{0, 0}, n1{1, 1}, n2{2, 2};
    CHECK(std::abs(s.amplitude(n0) - c0) < 1e-14);
    CHECK(std::abs(s.amplitude(n1) - 0.2 * c0) < 1e-14);
    CHECK(std::abs(s.amplitude(n2) - 0.04 * c0) < 1e-14);
    CHECK(std::abs(std::norm(s.amplitude(n0)) - 1.0 / static_cast<double>(norm2)) < 1e-14);
}

TEST_CASE("two-mode squeezed state: P(n=1)/P(n=0) = chi by enumeration") {
    for (double chi : {1e-3, 0.02, 0.3}) {
        const PureState s = make_two_mode_squeezed(chi, 3, A, B);
        double p0 = 0.0, p1 = 0.0;
        for (Eigen::Index i = 0; i < s.reg().dim(); ++i) {
            const auto occ = s.reg().occupations(i);
            const double w = std::norm(s.amplitudes()(i));
            if (occ[0] == 0 && occ[1] == 0) p0 += w;
            if (occ[0] == 1 && occ[1] == 1) p1 += w;
        }
        CHECK(p1 / p0 == doctest::Approx(chi).epsilon(1e-12));
    }
}

TEST_CASE("two-mode squeezed state: domain errors") {
    CHECK_THROWS_AS(make_two_mode_squeezed(-0.1, 2, A, B), DomainError);
    CHECK_THROWS_AS(make_two_mode_squeezed(1.0, 2, A, B), DomainError);
    CHECK_THROWS_AS(make_two_mode_squeezed(0.1, 0, A, B), DomainError);
}

TEST_CASE("register basis ordering: last mode fastest") {
    ModeRegister reg({A, B}, 2);
    const std::array<int, 2> occ{1, 2};
    CHECK(reg.basis_index(occ) == 1 * 3 + 2);
    CHECK(reg.occupations(5) == std::vector<int>{1, 2});
    CHECK(reg.dim() == 9);
    CHECK_THROWS_AS(ModeRegister({A, A}, 2), DomainError);
}

TEST_CASE("apply_unitary: identity leaves the state unchanged") {
    const PureState s = make_two_mode_squeezed(0.1, 2, A, B);
    const std::array<ModeLabel, 2> both{A, B};
    const PureState t = apply_unitary(s, Matrix::Identity(9, 9), both);
    CHECK((t.amplitudes() - s.amplitudes()).norm() < 1e-14);
}

TEST_CASE("apply_mode_unitary: half-wave plate at 22.5 deg maps |H> to (|H>+|V>)/sqrt(2)") {
    // H mode = first, V mode = second; |H> = |1,0>
    ModeRegister reg({A, B}, 1);
    Vector amp = Vector::Zero(4);
    const std::array<int, 2> h_occ{1, 0};
    amp(reg.basis_index(h_occ)) = 1.0;
    const PureState h(reg, amp);

    Matrix hwp(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    hwp << s, s, s, -s;
    const std::array<ModeLabel, 2> both{A, B};
    const PureState out = apply_mode_unitary(h, hwp, both);
    const std::array<int, 2> v_occ{0, 1};
    CHECK(std::abs(out.amplitude(h_occ) - s) < 1e-12);
    CHECK(std::abs(out.amplitude(v_occ) - s) < 1e-12);
}

TEST_CASE("phase shifter then 50:50 merge interferes as cos^2(phi/2)") {
    // oracle: hand-propagated two-mode single photon
    ModeRegister reg({A, B}, 1);
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    const std::array<ModeLabel, 2> both{A, B};
    Matrix bs(2, 2);
    const double s = 1.0 / std::sqrt(2.0);
    bs << s, s, s, -s;

    TrialRng rng(7);
    for (int k = 0; k < 20; ++k) {
        const double phi = 2.0 * M_PI * rng.next_double();
        Vector amp = Vector::Zero(4);
        amp(reg.basis_index(occ10)) = s;
        amp(reg.basis_index(occ01)) = s;
        PureState psi(reg, amp);
        psi = phase_shift(psi, B, phi);
        psi = apply_mode_unitary(psi, bs, both);
        const double p_a = std::norm(psi.amplitude(occ10));
        const double expected = std::cos(phi / 2.0) * std::cos(phi / 2.0);
        CHECK(p_a == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("apply_unitary: dimension and unitarity validation") {
    const PureState s = make_two_mode_squeezed(0.1, 2, A, B);
    const std::array<ModeLabel, 1> one{A};
    CHECK_THROWS_AS(apply_unitary(s, Matrix::Identity(4, 4), one), ShapeError);
    Matrix bad = Matrix::Identity(3, 3);
    bad(0, 0) = 2.0;
    CHECK_THROWS_AS(apply_unitary(s, bad, one), ValidationError);
}

TEST_CASE("loss channel: eta = 1 is the identity") {
    const PureState s = make_two_mode_squeezed(0.2, 2, A, B);
    const DensityOperator rho = s.density();
    const DensityOperator out = loss_channel(rho, A, 1.0);
    CHECK((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("loss channel: single photon binomial split") {
    ModeRegister reg({A}, 2);
    Matrix one = Matrix::Zero(3, 3);
    one(1, 1) = 1.0;
    const DensityOperator out = loss_channel(DensityOperator(reg, one), A, 0.92);
    CHECK(out.matrix()(1, 1).real() == doctest::Approx(0.92).epsilon(1e-12));
    CHECK(out.matrix()(0, 0).real() == doctest::Approx(0.08).epsilon(1e-12));
}

TEST_CASE("loss channel: two-photon binomial diagonal") {
    // oracle: diag((1-eta)^2, 2 eta (1-eta), eta^2) enumerated by hand
    const double eta = 0.6;
    ModeRegister reg({A}, 2);
    Matrix two = Matrix::Zero(3, 3);
    two(2, 2) = 1.0;
    const DensityOperator out = loss_channel(DensityOperator(reg, two), A, eta);
    CHECK(out.matrix()(0, 0).real() == doctest::Approx((1 - eta) * (1 - eta)));
    CHECK(out.matrix()(1, 1).real() == doctest::Approx(2 * eta * (1 - eta)));
    CHECK(out.matrix()(2, 2).real() == doctest::Approx(eta * eta));
    CHECK(out.trace_real() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("loss channel: composition laws") {
    TrialRng rng(11);
    ModeRegister reg({A, B}, 2);
    const DensityOperator rho = random_density(reg, rng);

    // same mode: loss(eta1) o loss(eta2) = loss(eta1 eta2)
    const DensityOperator seq = loss_channel(loss_channel(rho, A, 0.7), A, 0.5);
    const DensityOperator direct = loss_channel(rho, A, 0.35);
    CHECK((seq.matrix() - direct.matrix()).cwiseAbs().maxCoeff() < 1e-12);

    // distinct modes commute
    const DensityOperator ab = loss_channel(loss_channel(rho, A, 0.7), B, 0.4);
    const DensityOperator ba = loss_channel(loss_channel(rho, B, 0.4), A, 0.7);
    CHECK((ab.matrix() - ba.matrix()).cwiseAbs().maxCoeff() < 1e-12);

    CHECK_THROWS_AS(loss_channel(rho, A, -0.1), DomainError);
    CHECK_THROWS_AS(loss_channel(rho, A, 1.1), DomainError);
}

TEST_CASE("dephasing channel: single-excitation coherence scales by lambda") {
    ModeRegister reg({A, B}, 1);
    Vector amp = Vector::Zero(4);
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    amp(reg.basis_index(occ10)) = 1.0 / std::sqrt(2.0);
    amp(reg.basis_index(occ01)) = 1.0 / std::sqrt(2.0);
    const DensityOperator rho = PureState(reg, amp).density();

    const double lambda = 0.37;
    const DensityOperator out = dephasing_channel(rho, A, B, lambda);
    const auto i10 = reg.basis_index(occ10);
    const auto i01 = reg.basis_index(occ01);
    CHECK(std::abs(out.matrix()(i10, i01) - Complex(lambda / 2.0)) < 1e-12);
    CHECK(out.matrix()(i10, i10).real() == doctest::Approx(0.5)); // populations intact

    // semigroup: two applications compose multiplicatively
    const DensityOperator twice =
        dephasing_channel(dephasing_channel(rho, A, B, 0.8), A, B, 0.5);
    const DensityOperator once = dephasing_channel(rho, A, B, 0.4);
    CHECK((twice.matrix() - once.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("partial trace: full keep set is the identity operation") {
    TrialRng rng(3);
    ModeRegister reg({A, B}, 2);
    const DensityOperator rho = random_density(reg, rng);
    const std::array<ModeLabel, 2> keep{A, B};
    const DensityOperator out = partial_trace(rho, keep);
    CHECK((out.matrix() - rho.matrix()).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("partial trace: Bell state reduces to the maximally mixed qubit") {
    ModeRegister reg({A, B}, 1);
    Vector amp = Vector::Zero(4);
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    amp(reg.basis_index(occ10)) = 1.0 / std::sqrt(2.0);
    amp(reg.basis_index(occ01)) = 1.0 / std::sqrt(2.0);
    const std::array<ModeLabel, 1> keep{A};
    const DensityOperator red = partial_trace(PureState(reg, amp).density(), keep);
    CHECK(red.matrix()(0, 0).real() == doctest::Approx(0.5));
    CHECK(red.matrix()(1, 1).real() == doctest::Approx(0.5));
    CHECK(std::abs(red.matrix()(0, 1)) < 1e-14);
}

TEST_CASE("partial trace: product state factor recovered exactly") {
    TrialRng rng(5);
    ModeRegister ra({A}, 2), rb({B}, 2);
    const DensityOperator rho_a = random_density(ra, rng);
    const DensityOperator rho_b = random_density(rb, rng);
    ModeRegister reg({A, B}, 2);
    Matrix prod = Matrix::Zero(9, 9);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            prod.block(3 * i, 3 * j, 3, 3) = rho_a.matrix()(i, j) * rho_b.matrix();
    const std::array<ModeLabel, 1> keep{A};
    const DensityOperator red = partial_trace(DensityOperator(reg, prod), keep);
    CHECK((red.matrix() - rho_a.matrix()).cwiseAbs().maxCoeff() < 1e-12);

    const std::array<ModeLabel, 0> none{};
    CHECK_THROWS_AS(partial_trace(DensityOperator(reg, prod), none), DomainError);
}

TEST_CASE("outcome probabilities: vacuum in the number basis") {
    ModeRegister reg({A}, 1);
    Vector amp = Vector::Zero(2);
    amp(0) = 1.0;
    const PureState vac(reg, amp);
    const std::vector<Matrix> povm{number_projector(reg, A, 0), number_projector(reg, A, 1)};
    const Eigen::VectorXd p = outcome_probabilities(vac, povm);
    CHECK(p(0) == doctest::Approx(1.0));
    CHECK(p(1) == doctest::Approx(0.0));
}

TEST_CASE("outcome probabilities: +-45 analysis of (|H>+e^{i phi}|V>)/sqrt(2)") {
    // oracle: direct inner products with (|H>+-|V>)/sqrt(2)
    ModeRegister reg({A, B}, 1); // H photon = |1,0>, V photon = |0,1>
    const std::array<int, 2> h_occ{1, 0}, v_occ{0, 1};
    const auto ih = reg.basis_index(h_occ);
    const auto iv = reg.basis_index(v_occ);

    Vector plus = Vector::Zero(4), minus = Vector::Zero(4);
    plus(ih) = plus(iv) = 1.0 / std::sqrt(2.0);
    minus(ih) = 1.0 / std::sqrt(2.0);
    minus(iv) = -1.0 / std::sqrt(2.0);
    Matrix proj_plus = plus * plus.adjoint();
    Matrix proj_minus = minus * minus.adjoint();
    Matrix rest = Matrix::Identity(4, 4) - proj_plus - proj_minus;

    TrialRng rng(17);
    for (int k = 0; k < 10; ++k) {
        const double phi = 2.0 * M_PI * rng.next_double();
        Vector amp = Vector::Zero(4);
        amp(ih) = 1.0 / std::sqrt(2.0);
        amp(iv) = std::exp(Complex(0, phi)) / std::sqrt(2.0);
        const PureState psi(reg, amp);
        const Eigen::VectorXd p =
            outcome_probabilities(psi, {proj_plus, proj_minus, rest});
        CHECK(p(0) == doctest::Approx(std::pow(std::cos(phi / 2.0), 2)).epsilon(1e-10));
        CHECK(p(1) == doctest::Approx(std::pow(std::sin(phi / 2.0), 2)).epsilon(1e-10));
        CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("outcome probabilities: incomplete POVM rejected") {
    ModeRegister reg({A}, 1);
    Vector amp = Vector::Zero(2);
    amp(0) = 1.0;
    const PureState vac(reg, amp);
    CHECK_THROWS_AS(outcome_probabilities(vac, {number_projector(reg, A, 0)}),
                    ValidationError);
}

TEST_CASE("property: channels preserve trace and positivity") {
    TrialRng rng(23);
    ModeRegister reg({A, B}, 2);
    for (int k = 0; k < 25; ++k) {
        DensityOperator rho = random_density(reg, rng);
        switch (k % 3) {
            case 0: rho = loss_channel(rho, k % 2 ? A : B, rng.next_double()); break;
            case 1: rho = dephasing_channel(rho, A, B, rng.next_double()); break;
            default: {
                const Matrix u = random_unitary(2, rng);
                const std::array<ModeLabel, 2> both{A, B};
                rho = apply_mode_unitary(rho, u, both);
                break;
            }
        }
        CHECK(std::abs(rho.trace_real() - 1.0) < 1e-10);
        CHECK(rho.min_eigenvalue() > -1e-9);
    }
}

TEST_CASE("property: lifted mode unitaries are unitary on the truncated space") {
    TrialRng rng(29);
    ModeRegister reg({A, B}, 2);
    const std::array<ModeLabel, 2> both{A, B};
    for (int k = 0; k < 10; ++k) {
        const Matrix u = lift_mode_unitary(reg, random_unitary(2, rng), both);
        const double dev =
            (u.adjoint() * u - Matrix::Identity(9, 9)).cwiseAbs().maxCoeff();
        CHECK(dev < 1e-10);
    }
}

TEST_CASE("property: results independent of n_max once truncation weight is negligible") {
    // chi = 0.01: the discarded n = 7 weight is chi^7 = 1e-14 < 1e-12
    const double chi = 0.01;
    const double eta = 0.83;
    std::array<double, 2> p_click{};
    for (int idx = 0; idx < 2; ++idx) {
        const int n_max = 6 + idx;
        const PureState s = make_two_mode_squeezed(chi, n_max, A, B);
        DensityOperator rho = loss_channel(s.density(), B, eta);
        const auto [no_click, click] = click_povm(rho.reg(), B, 0.0);
        p_click[idx] = (click * rho.matrix()).trace().real();
    }
    CHECK(std::abs(p_click[0] - p_click[1]) < 1e-12);
}

TEST_CASE("prune_vacuum drops empty modes and rejects occupied ones") {
    const PureState s = make_two_mode_squeezed(0.2, 2, A, B);
    DensityOperator rho = loss_channel(s.density(), B, 0.0); // empty B
    const std::array<ModeLabel, 1> drop{B};
    const DensityOperator pruned = prune_vacuum(rho, drop);
    CHECK(pruned.reg().num_modes() == 1);
    CHECK(std::abs(pruned.trace_real() - 1.0) < 1e-10);

    const DensityOperator occupied = s.density();
    CHECK_THROWS_AS(prune_vacuum(occupied, drop), ValidationError);
}

TEST_CASE("quantum channel validation") {
    ModeRegister reg({A, B}, 2);
    auto ch = QuantumChannel::make_loss(A, 0.5);
    CHECK_NOTHROW(ch.validate(reg));
    CHECK_THROWS_AS(QuantumChannel::make_loss(A, 1.5), DomainError);
    CHECK_THROWS_AS(QuantumChannel::make_dephasing(A, A, 0.5).validate(reg), DomainError);

    Matrix not_unitary = Matrix::Identity(9, 9) * 1.01;
    auto bad = QuantumChannel::make_unitary(not_unitary, {A, B});
    CHECK_THROWS_AS(bad.validate(reg), ValidationError);
}

TEST_SUITE_END();
