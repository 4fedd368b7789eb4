// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <array>
#include <cmath>

#include "dlczsim/node.hpp"

using namespace dlczsim;
using namespace dlczsim::node;
using fock::Complex;
using fock::ModeLabel;

namespace {

const ModeLabel kSwL = fock::spin_wave(fock::Site::L);
const ModeLabel kSwR = fock::spin_wave(fock::Site::R);
const ModeLabel kStokesR = fock::stokes(fock::Site::R);
const ModeLabel kAsL = fock::anti_stokes(fock::Site::L);
const ModeLabel kAsR = fock::anti_stokes(fock::Site::R);

NoiseParams ideal_params(double chi) {
    NoiseParams p;
    p.chi = chi;
    p.eta_ret = 1.0;
    p.eta_trans = 1.0;
    p.eta_det = 1.0;
    p.dark_prob = 0.0;
    p.sigma_phi = 0.0;
    p.eta_asym = 1.0;
    return p;
}

double state_fidelity(const fock::DensityOperator& rho, const fock::PureState& target) {
    return (target.amplitudes().adjoint() * rho.matrix() * target.amplitudes())(0).real();
}

} // namespace

TEST_SUITE_BEGIN("node");

TEST_CASE("symmetric_write: chi = 0 gives the global vacuum") {
    const fock::PureState s = symmetric_write(ideal_params(0.0), 1.2);
    CHECK(std::abs(s.amplitudes()(0) - 1.0) < 1e-14);
    CHECK(std::abs(s.norm() - 1.0) < 1e-12);
}

TEST_CASE("symmetric_write: single-excitation weight is 2 chi (1 - chi) x normalization") {
    // oracle: enumerate basis weights of the product of two squeezed states
    const double chi = 0.02;
    const fock::PureState s = symmetric_write(ideal_params(chi), 0.0);
    double p_one = 0.0;
    for (Eigen::Index i = 0; i < s.reg().dim(); ++i) {
        const auto occ = s.reg().occupations(i);
        const int total_sw = occ[0] + occ[2]; // sw_L, sw_R occupations
        if (total_sw == 1) p_one += std::norm(s.amplitudes()(i));
    }
    // per ensemble the truncated normalization is 1/(1 + chi + chi^2)
    const double norm1 = 1.0 / (1.0 + chi + chi * chi);
    const double expected = 2.0 * chi * norm1 * norm1;
    CHECK(p_one == doctest::Approx(expected).epsilon(1e-12));
    CHECK(p_one == doctest::Approx(2.0 * chi).epsilon(0.1)); // small-chi law
}

TEST_CASE("symmetric_write: R branch amplitude carries e^{i phi_s}") {
    const double phi_s = 0.83;
    const fock::PureState s = symmetric_write(ideal_params(0.05), phi_s);
    // amplitude of |sw_L=0, S_L=0, sw_R=1, S_R=1> vs |1,1,0,0>
    const std::array<int, 4> right{0, 0, 1, 1}, left{1, 1, 0, 0};
    const Complex ratio = s.amplitude(right) / s.amplitude(left);
    CHECK(std::abs(ratio - std::exp(Complex(0.0, phi_s))) < 1e-12);
}

TEST_CASE("herald: near-ideal conditions approach the target entangled state") {
    const double chi = 1e-3;
    const double phi_s = 0.37;
    const auto params = ideal_params(chi);
    const fock::PureState joint = symmetric_write(params, phi_s);
    const HeraldedState h = herald(joint, StokesDetector::D1, params);

    CHECK(h.herald_probability > 0.0);
    CHECK(h.herald_probability <= 1.0);
    CHECK(h.herald_sign == +1);
    const double f = state_fidelity(h.rho, heralded_target(+1, phi_s, params.n_max));
    CHECK(f >= 1.0 - 5.0 * chi);

    // tighter chi gives higher fidelity still
    const auto params4 = ideal_params(1e-4);
    const HeraldedState h4 =
        herald(symmetric_write(params4, phi_s), StokesDetector::D1, params4);
    CHECK(state_fidelity(h4.rho, heralded_target(+1, phi_s, params4.n_max)) > f);
}

TEST_CASE("herald: D1 and D2 outcomes differ exactly by the coherence sign") {
    const auto params = ideal_params(1e-3);
    const fock::PureState joint = symmetric_write(params, 0.0);
    const HeraldedState h1 = herald(joint, StokesDetector::D1, params);
    const HeraldedState h2 = herald(joint, StokesDetector::D2, params);
    CHECK(h1.herald_sign == +1);
    CHECK(h2.herald_sign == -1);

    const auto& reg = h1.rho.reg();
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    const auto i10 = reg.basis_index(occ10);
    const auto i01 = reg.basis_index(occ01);
    const Complex c1 = h1.rho.matrix()(i10, i01);
    const Complex c2 = h2.rho.matrix()(i10, i01);
    CHECK(std::abs(c1 + c2) < 1e-12); // opposite sign
    CHECK(std::abs(c1) > 0.49);       // magnitude ~ 1/2
}

TEST_CASE("herald: pure dark count heralds the vacuum") {
    NoiseParams params = ideal_params(0.0);
    params.dark_prob = 1.0;
    const fock::PureState joint = symmetric_write(params, 0.0);
    const HeraldedState h = herald(joint, StokesDetector::D1, params);
    CHECK(h.herald_probability == doctest::Approx(1.0));
    CHECK(h.rho.matrix()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("herald: zero click probability raises") {
    const auto params = ideal_params(0.0);
    const fock::PureState joint = symmetric_write(params, 0.0);
    CHECK_THROWS_AS(herald(joint, StokesDetector::D1, params), HeraldImpossibleError);
}

TEST_CASE("herald: output symmetric under relabeling which ensemble is L") {
    // mirror of the symmetric pipeline: conditional populations swap roles
    NoiseParams params = ideal_params(5e-3);
    params.eta_asym = 1.0;
    const fock::PureState joint = symmetric_write(params, 0.0);
    const HeraldedState h = herald(joint, StokesDetector::D1, params);
    const auto& reg = h.rho.reg();
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    const double p10 = h.rho.matrix()(reg.basis_index(occ10), reg.basis_index(occ10)).real();
    const double p01 = h.rho.matrix()(reg.basis_index(occ01), reg.basis_index(occ01)).real();
    CHECK(p10 == doctest::Approx(p01).epsilon(1e-10));
}

TEST_CASE("store: tau = 0 is the identity") {
    const auto params = ideal_params(1e-3);
    const HeraldedState h =
        herald(symmetric_write(params, 0.0), StokesDetector::D1, params);
    const HeraldedState out = store(h, 0.0, params);
    CHECK((out.rho.matrix() - h.rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
    CHECK_THROWS_AS(store(h, -1.0, params), DomainError);
}

TEST_CASE("store: one lifetime shrinks the coherence by 1/e") {
    auto params = ideal_params(1e-3);
    params.tau_mem_ns = 250.0;
    const HeraldedState h =
        herald(symmetric_write(params, 0.0), StokesDetector::D1, params);
    const HeraldedState out = store(h, 250.0, params);
    const auto& reg = h.rho.reg();
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    const auto i10 = reg.basis_index(occ10);
    const auto i01 = reg.basis_index(occ01);
    const double before = std::abs(h.rho.matrix()(i10, i01));
    const double after = std::abs(out.rho.matrix()(i10, i01));
    CHECK(after / before == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
}

TEST_CASE("store: semigroup property, including amplitude decay") {
    auto params = ideal_params(1e-3);
    params.tau_mem_ns = 180.0;
    params.tau_amp_ns = 900.0;
    const HeraldedState h =
        herald(symmetric_write(params, 0.0), StokesDetector::D1, params);
    const HeraldedState split = store(store(h, 70.0, params), 50.0, params);
    const HeraldedState direct = store(h, 120.0, params);
    CHECK((split.rho.matrix() - direct.rho.matrix()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("read: lossless retrieval gives the pure anti-Stokes target") {
    const auto params = ideal_params(1e-4);
    const double phi_s = 0.21, phi_as = -0.49;
    const HeraldedState h =
        herald(symmetric_write(params, phi_s), StokesDetector::D1, params);
    const fock::DensityOperator rho_as = read(h, params, phi_as);

    CHECK(rho_as.reg().contains(kAsL));
    CHECK(rho_as.reg().contains(kAsR));
    const auto& reg = rho_as.reg();
    const std::array<int, 2> occ10{1, 0}, occ01{0, 1};
    const Complex coh = rho_as.matrix()(reg.basis_index(occ01), reg.basis_index(occ10));
    CHECK(std::abs(coh) == doctest::Approx(0.5).epsilon(5e-4));
    // the |01><10| element carries e^{i (phi_s + phi_as)}
    CHECK(std::arg(coh) == doctest::Approx(phi_s + phi_as).epsilon(1e-9));
}

TEST_CASE("read: eta_ret = 0.5 halves the photon population and adds vacuum") {
    // oracle: one photon through a 50% loss on either arm
    auto params = ideal_params(1e-4);
    params.eta_ret = 0.5;
    const HeraldedState h =
        herald(symmetric_write(params, 0.0), StokesDetector::D1, params);
    const fock::DensityOperator rho_as = read(h, params, 0.0);
    const auto& reg = rho_as.reg();
    const std::array<int, 2> vac{0, 0}, occ10{1, 0}, occ01{0, 1};
    const double p_vac = rho_as.matrix()(reg.basis_index(vac), reg.basis_index(vac)).real();
    const double p10 = rho_as.matrix()(reg.basis_index(occ10), reg.basis_index(occ10)).real();
    const double p01 = rho_as.matrix()(reg.basis_index(occ01), reg.basis_index(occ01)).real();
    CHECK(p_vac == doctest::Approx(0.5).epsilon(2e-3));
    CHECK(p10 + p01 == doctest::Approx(0.5).epsilon(2e-3));
}

TEST_CASE("joint polarization state: ideal limit is the Bell state") {
    NoiseParams params = ideal_params(1e-3);
    const fock::DensityOperator rho = joint_polarization_state(params);
    const fock::Vector bell = bell_phi_plus();
    const double f = (bell.adjoint() * rho.matrix() * bell)(0).real();
    CHECK(f == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(2.0 * std::abs(rho.matrix()(0, 3)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("joint polarization state: dephasing gives concurrence V and fidelity (1+V)/2") {
    // oracle: X-state concurrence 2 |rho_14| in closed form
    NoiseParams params = ideal_params(1e-3);
    params.sigma_phi = std::sqrt(-2.0 * std::log(0.875));
    const fock::DensityOperator rho = joint_polarization_state(params);
    const double v = 0.875;
    CHECK(rho.matrix()(0, 3).real() == doctest::Approx(v / 2.0).epsilon(1e-12));
    const double concurrence_closed_form = 2.0 * std::abs(rho.matrix()(0, 3));
    CHECK(concurrence_closed_form == doctest::Approx(v).epsilon(1e-12));

    const fock::Vector bell = bell_phi_plus();
    const double f = (bell.adjoint() * rho.matrix() * bell)(0).real();
    CHECK(f == doctest::Approx((1.0 + v) / 2.0).epsilon(1e-12));
}

TEST_CASE("heralded double-excitation weight scales linearly in chi") {
    // regression of log(p2/p1) on log(chi) over three decades
    std::vector<double> chis{1e-3, 1e-2, 1e-1};
    std::vector<double> ratios;
    for (double chi : chis) {
        const auto params = ideal_params(chi);
        const HeraldedState h =
            herald(symmetric_write(params, 0.0), StokesDetector::D1, params);
        double p1 = 0.0, p2 = 0.0;
        const auto& reg = h.rho.reg();
        for (Eigen::Index i = 0; i < reg.dim(); ++i) {
            const auto occ = reg.occupations(i);
            const double w = h.rho.matrix()(i, i).real();
            if (occ[0] + occ[1] == 1) p1 += w;
            if (occ[0] + occ[1] == 2) p2 += w;
        }
        ratios.push_back(p2 / p1);
    }
    // slope of log(ratio) vs log(chi)
    const double slope = (std::log(ratios[2]) - std::log(ratios[0])) /
                         (std::log(chis[2]) - std::log(chis[0]));
    CHECK(slope == doctest::Approx(1.0).epsilon(0.06));
}

TEST_CASE("noise params validation and warnings") {
    NoiseParams p;
    CHECK_NOTHROW(p.validate());
    CHECK(p.warnings().empty());
    p.chi = 0.2;
    CHECK(!p.warnings().empty());
    p.chi = 1.2;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = NoiseParams{};
    p.eta_det = 1.5;
    CHECK_THROWS_AS(p.validate(), DomainError);
    p = NoiseParams{};
    p.tau_mem_ns = 0.0;
    CHECK_THROWS_AS(p.validate(), DomainError);
    EnsembleNode node;
    CHECK_NOTHROW(node.validate());
}

TEST_SUITE_END();
