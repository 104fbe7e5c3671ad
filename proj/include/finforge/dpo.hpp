#pragma once

#include <cstddef>
#include <utility>

namespace finforge {

struct DpoInputs {
    double logp_policy_chosen = 0.0;
    double logp_policy_rejected = 0.0;
    double logp_ref_chosen = 0.0;
    double logp_ref_rejected = 0.0;
    double beta = 0.1;

    void validate() const;  // finite, beta > 0, log-probs <= 0
};

// beta * [(lp_pc - lp_rc) - (lp_pr - lp_rr)]: the scaled margin.
double dpo_z(const DpoInputs& x);

// -log sigmoid(z), computed with the sign-branched log1p form so |z| = 40
// neither overflows nor collapses to 0/inf prematurely.
double dpo_loss(const DpoInputs& x);

// d loss / d (logp_policy_chosen, logp_policy_rejected)
//   = (-beta * (1 - sigmoid(z)), +beta * (1 - sigmoid(z)))
std::pair<double, double> dpo_grad(const DpoInputs& x);

struct LrSchedule {
    double peak_lr = 1e-5;
    std::size_t warmup_steps = 500;
    std::size_t total_steps = 10000;
    double floor_lr = 0.0;

    void validate() const;  // warmup < total, 0 <= floor <= peak, peak > 0
};

// Linear warmup then cosine decay:
//   s < warmup: peak * s / warmup
//   else:       floor + (peak - floor) * (1 + cos(pi * progress)) / 2
double lr_at_step(std::size_t s, const LrSchedule& sched);

}  // namespace finforge
