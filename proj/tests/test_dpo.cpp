#include <cmath>
#include <cstdint>
#include <vector>

#include <doctest.h>

#include "finforge/dpo.hpp"
#include "finforge/errors.hpp"
#include "finforge/hash.hpp"

using namespace finforge;

namespace {

DpoInputs inputs(double pc, double pr, double rc, double rr, double beta = 0.1) {
    return DpoInputs{pc, pr, rc, rr, beta};
}

}  // namespace

TEST_CASE("dpo_z and loss golden") {
    // margin: (-1 - (-1.5)) - (-2 - (-1.5)) = 0.5 + 0.5 = 1.0, scaled by 0.1
    const auto x = inputs(-1.0, -2.0, -1.5, -1.5);
    CHECK(dpo_z(x) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(dpo_loss(x) == doctest::Approx(0.6443966600735709).epsilon(1e-15));
    const auto [gc, gr] = dpo_grad(x);
    CHECK(gc == doctest::Approx(-0.047502081252106004).epsilon(1e-14));
    CHECK(gr == doctest::Approx(+0.047502081252106004).epsilon(1e-14));
}

TEST_CASE("dpo_loss at zero margin is exactly ln 2") {
    // equal improvements on both sides cancel: z = 0
    const auto x = inputs(-1.0, -1.0, -2.0, -2.0);
    CHECK(dpo_z(x) == 0.0);
    CHECK(std::fabs(dpo_loss(x) - std::log(2.0)) <= 1e-12);
    const auto [gc, gr] = dpo_grad(x);
    CHECK(gc == doctest::Approx(-0.05).epsilon(1e-14));  // -beta * 1/2
    CHECK(gr == doctest::Approx(0.05).epsilon(1e-14));
}

TEST_CASE("dpo_loss stays finite and sane at |z| = 40 and beyond") {
    // z = beta * margin; beta 1.0 with margin +-40
    const auto big = inputs(-0.0, -40.0, -0.0, -0.0, 1.0);
    CHECK(dpo_z(big) == doctest::Approx(40.0));
    const double loss_pos = dpo_loss(big);
    CHECK(std::isfinite(loss_pos));
    CHECK(loss_pos == doctest::Approx(std::exp(-40.0)).epsilon(1e-6));  // ~ e^-40, not 0 yet
    CHECK(loss_pos > 0.0);

    const auto neg = inputs(-40.0, -0.0, -0.0, -0.0, 1.0);
    CHECK(dpo_z(neg) == doctest::Approx(-40.0));
    const double loss_neg = dpo_loss(neg);
    CHECK(std::isfinite(loss_neg));
    // for z << 0, loss ~ -z
    CHECK(loss_neg == doctest::Approx(40.0).epsilon(1e-9));

    // extreme margins must not produce inf/nan either
    const auto extreme = inputs(-0.0, -800.0, -0.0, -0.0, 1.0);
    CHECK(std::isfinite(dpo_loss(extreme)));
    CHECK(std::isfinite(dpo_loss(inputs(-800.0, -0.0, -0.0, -0.0, 1.0))));
    const auto [egc, egr] = dpo_grad(extreme);
    CHECK(std::isfinite(egc));
    CHECK(egc == doctest::Approx(0.0).epsilon(1e-12));  // saturated: nothing to push
}

TEST_CASE("dpo_grad matches central finite differences on random inputs") {
    std::uint64_t state = 0xD1F0;
    const double h = 1e-5;
    for (int i = 0; i < 1000; ++i) {
        const double pc = -4.0 * splitmix_unit(state);
        const double pr = -4.0 * splitmix_unit(state);
        const double rc = -4.0 * splitmix_unit(state);
        const double rr = -4.0 * splitmix_unit(state);
        const double beta = 0.05 + splitmix_unit(state);
        const auto x = inputs(pc, pr, rc, rr, beta);
        const auto [gc, gr] = dpo_grad(x);

        auto shifted = [&](double dpc, double dpr) {
            auto y = x;
            y.logp_policy_chosen += dpc;
            y.logp_policy_rejected += dpr;
            return dpo_loss(y);
        };
        const double fd_c = (shifted(+h, 0) - shifted(-h, 0)) / (2 * h);
        const double fd_r = (shifted(0, +h) - shifted(0, -h)) / (2 * h);
        CHECK(gc == doctest::Approx(fd_c).epsilon(1e-6));
        CHECK(gr == doctest::Approx(fd_r).epsilon(1e-6));
        CHECK(gc == doctest::Approx(-gr).epsilon(1e-15));  // equal and opposite
    }
}

TEST_CASE("DpoInputs validation") {
    CHECK_THROWS_AS(dpo_z(inputs(0.5, -1, -1, -1)), DataError);   // log-prob > 0
    CHECK_THROWS_AS(dpo_z(inputs(-1, -1, -1, -1, 0.0)), DataError);  // beta
    CHECK_THROWS_AS(dpo_z(inputs(-1, -1, -1, -1, -0.1)), DataError);
    DpoInputs nan = inputs(-1, -1, -1, -1);
    nan.logp_ref_rejected = std::nan("");
    CHECK_THROWS_AS(dpo_z(nan), DataError);
    // zero log-probs are legal (probability exactly 1)
    CHECK(dpo_z(inputs(0.0, 0.0, 0.0, 0.0)) == 0.0);
}

TEST_CASE("lr_at_step goldens") {
    const LrSchedule sched{1e-5, 500, 10000, 0.0};
    CHECK(lr_at_step(0, sched) == 0.0);
    CHECK(lr_at_step(250, sched) == doctest::Approx(5e-6).epsilon(1e-15));
    CHECK(lr_at_step(500, sched) == 1e-5);  // exact peak, no cos() rounding
    CHECK(lr_at_step(10000, sched) == 0.0);  // exact floor at the end
    // halfway through decay: floor + (peak-floor)/2
    CHECK(lr_at_step(5250, sched) == doctest::Approx(5e-6).epsilon(1e-12));

    const LrSchedule floored{1e-5, 500, 10000, 1e-6};
    CHECK(lr_at_step(10000, floored) == 1e-6);
    for (std::size_t s = 0; s <= 10000; s += 250) {
        CHECK(lr_at_step(s, floored) <= 1e-5 + 1e-20);
        if (s >= 500) CHECK(lr_at_step(s, floored) >= 1e-6 - 1e-20);
    }
}

TEST_CASE("lr schedule is continuous at the warmup boundary") {
    const LrSchedule sched{3e-4, 100, 4000, 1e-6};
    const double before = lr_at_step(99, sched);
    const double at = lr_at_step(100, sched);
    CHECK(at == sched.peak_lr);
    CHECK(std::fabs(at - before) <= sched.peak_lr / 100.0 + 1e-12);
    // and exact equality of the two formulas' limits at the seam
    CHECK(std::fabs(at - (sched.floor_lr + 0.5 * (sched.peak_lr - sched.floor_lr) *
                                               (1.0 + std::cos(0.0)))) <= 1e-12);
}

TEST_CASE("lr schedule is monotone up then monotone down") {
    const LrSchedule sched{1e-5, 500, 10000, 5e-7};
    double prev = -1.0;
    for (std::size_t s = 0; s <= 500; ++s) {
        const double lr = lr_at_step(s, sched);
        CHECK(lr >= prev);
        prev = lr;
    }
    prev = lr_at_step(500, sched);
    for (std::size_t s = 501; s <= 10000; s += 7) {
        const double lr = lr_at_step(s, sched);
        CHECK(lr <= prev);
        prev = lr;
    }
    CHECK(lr_at_step(10000, sched) == sched.floor_lr);
}

TEST_CASE("lr schedule validation") {
    CHECK_THROWS_AS(lr_at_step(0, LrSchedule{0.0, 10, 100, 0.0}), ConfigError);
    CHECK_THROWS_AS(lr_at_step(0, LrSchedule{1e-5, 100, 100, 0.0}), ConfigError);
    CHECK_THROWS_AS(lr_at_step(0, LrSchedule{1e-5, 10, 100, 2e-5}), ConfigError);
    CHECK_THROWS_AS(lr_at_step(0, LrSchedule{1e-5, 10, 100, -1e-9}), ConfigError);
    CHECK_THROWS_AS(lr_at_step(101, LrSchedule{1e-5, 10, 100, 0.0}), DataError);
    lr_at_step(100, LrSchedule{1e-5, 10, 100, 0.0});  // the last step is valid
}
