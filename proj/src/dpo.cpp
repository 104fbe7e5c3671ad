#include "finforge/dpo.hpp"

#include <cmath>
#include <string>

#include "finforge/errors.hpp"

namespace finforge {

void DpoInputs::validate() const {
    const double values[] = {logp_policy_chosen, logp_policy_rejected, logp_ref_chosen,
                             logp_ref_rejected, beta};
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError("non-finite DPO input");
    }
    if (beta <= 0.0) throw DataError("beta must be positive");
    if (logp_policy_chosen > 0.0 || logp_policy_rejected > 0.0 ||
        logp_ref_chosen > 0.0 || logp_ref_rejected > 0.0) {
        throw DataError("log-probabilities must be <= 0");
    }
}

double dpo_z(const DpoInputs& x) {
    x.validate();
    return x.beta * ((x.logp_policy_chosen - x.logp_ref_chosen) -
                     (x.logp_policy_rejected - x.logp_ref_rejected));
}

double dpo_loss(const DpoInputs& x) {
    const double z = dpo_z(x);
    // -log sigmoid(z) = log(1 + exp(-z)), branched on sign for stability
    if (z >= 0.0) return std::log1p(std::exp(-z));
    return -z + std::log1p(std::exp(z));
}

std::pair<double, double> dpo_grad(const DpoInputs& x) {
    const double z = dpo_z(x);
    // 1 - sigmoid(z) = sigmoid(-z), computed without overflow on either sign
    const double one_minus_sigmoid =
        z >= 0.0 ? std::exp(-z) / (1.0 + std::exp(-z)) : 1.0 / (1.0 + std::exp(z));
    const double g = -x.beta * one_minus_sigmoid;
    return {g, -g};
}

void LrSchedule::validate() const {
    if (peak_lr <= 0.0 || !std::isfinite(peak_lr)) {
        throw ConfigError("peak_lr must be positive and finite");
    }
    if (floor_lr < 0.0 || floor_lr > peak_lr) {
        throw ConfigError("floor_lr must be in [0, peak_lr]");
    }
    if (warmup_steps >= total_steps) {
        throw ConfigError("warmup_steps must be < total_steps");
    }
}

double lr_at_step(std::size_t s, const LrSchedule& sched) {
    sched.validate();
    if (s > sched.total_steps) {
        throw DataError("step " + std::to_string(s) + " beyond total_steps " +
                        std::to_string(sched.total_steps));
    }
    if (s < sched.warmup_steps) {
        return sched.peak_lr * static_cast<double>(s) /
               static_cast<double>(sched.warmup_steps);
    }
    const double progress = static_cast<double>(s - sched.warmup_steps) /
                            static_cast<double>(sched.total_steps - sched.warmup_steps);
    return sched.floor_lr +
           0.5 * (sched.peak_lr - sched.floor_lr) * (1.0 + std::cos(M_PI * progress));
}

}  // namespace finforge
