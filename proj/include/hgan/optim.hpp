// Adam optimizer over a named parameter list.

#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgan/tensor.hpp"

namespace hgan {

struct NamedParam {
    std::string name;
    Tensor value;
};

using NetworkParams = std::vector<NamedParam>;

struct AdamConfig {
    double lr = 2e-4;
    double beta1 = 0.5;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// One parameter's moment estimates; flat, same length as the tensor.
struct AdamSlot {
    std::vector<double> m;
    std::vector<double> v;
};

class Adam {
public:
    explicit Adam(NetworkParams params, AdamConfig cfg = {})
        : params_(std::move(params)), cfg_(cfg) {
        slots_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            if (!params_[i].value.requires_grad())
                throw std::invalid_argument("adam: parameter " + params_[i].name +
                                            " does not require gradients");
            slots_[i].m.assign(params_[i].value.size(), 0.0);
            slots_[i].v.assign(params_[i].value.size(), 0.0);
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.value.zero_grad();
    }

    // Bias-corrected update from the accumulated gradients.
    void step() {
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& vals = params_[i].value.values();
            const auto& grad = params_[i].value.grad();
            auto& slot = slots_[i];
            for (std::size_t k = 0; k < vals.size(); ++k) {
                const double g = grad[k];
                slot.m[k] = cfg_.beta1 * slot.m[k] + (1.0 - cfg_.beta1) * g;
                slot.v[k] = cfg_.beta2 * slot.v[k] + (1.0 - cfg_.beta2) * g * g;
                vals[k] -= cfg_.lr * (slot.m[k] / bc1) / (std::sqrt(slot.v[k] / bc2) + cfg_.eps);
            }
        }
    }

    std::uint64_t steps_taken() const { return t_; }
    const AdamConfig& config() const { return cfg_; }
    const NetworkParams& params() const { return params_; }

    // Checkpoint access: moment vectors addressed like the parameters.
    const AdamSlot& slot(std::size_t i) const { return slots_[i]; }
    AdamSlot& slot(std::size_t i) { return slots_[i]; }
    void set_steps_taken(std::uint64_t t) { t_ = t; }

private:
    NetworkParams params_;
    AdamConfig cfg_;
    std::vector<AdamSlot> slots_;
    std::uint64_t t_ = 0;
};

}  // namespace hgan
