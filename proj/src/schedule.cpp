#include "hdrvqa/schedule.hpp"

#include <cmath>

namespace hdrvqa {

double lr_at(int64_t step, double base_lr, int warmup_epochs, int epochs,
             int64_t steps_per_epoch) {
    require(step >= 0, ErrorClass::DomainError, "negative step");
    require(steps_per_epoch > 0 && epochs > 0, ErrorClass::DomainError,
            "schedule needs positive horizon");
    require(warmup_epochs >= 0 && warmup_epochs < epochs, ErrorClass::DomainError,
            "warmup must be shorter than the run");

    const int64_t warmup = warmup_epochs * steps_per_epoch;
    const int64_t total = int64_t(epochs) * steps_per_epoch;
    if (step < warmup) return base_lr * double(step) / double(warmup);
    double progress = double(step - warmup) / double(total - warmup);
    if (progress > 1.0) progress = 1.0;
    return base_lr * 0.5 * (1.0 + std::cos(3.141592653589793 * progress));
}

}  // namespace hdrvqa
