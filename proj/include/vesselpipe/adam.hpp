#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "vesselpipe/layers.hpp"

namespace vesselpipe {

// Adam with bias correction; operates on the ParamView list.
class Adam {
public:
    explicit Adam(double learning_rate, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : lr_(learning_rate), beta1_(beta1), beta2_(beta2), eps_(eps) {
        if (learning_rate <= 0.0) throw std::invalid_argument("Adam: learning rate must be > 0");
    }

    void step(const std::vector<ParamView>& params) {
        size_t total = 0;
        for (const auto& p : params) total += p.count;
        if (m_.empty()) {
            m_.assign(total, 0.0f);
            v_.assign(total, 0.0f);
        } else if (m_.size() != total) {
            throw std::logic_error("Adam: parameter count changed between steps");
        }

        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));

        size_t offset = 0;
        for (const auto& p : params) {
            for (size_t i = 0; i < p.count; ++i) {
                const size_t j = offset + i;
                const double g = p.grads[i];
                m_[j] = static_cast<float>(beta1_ * m_[j] + (1.0 - beta1_) * g);
                v_[j] = static_cast<float>(beta2_ * v_[j] + (1.0 - beta2_) * g * g);
                const double mhat = m_[j] / bc1;
                const double vhat = v_[j] / bc2;
                p.values[i] -= static_cast<float>(lr_ * mhat / (std::sqrt(vhat) + eps_));
            }
            offset += p.count;
        }
    }

private:
    double lr_, beta1_, beta2_, eps_;
    size_t t_ = 0;
    std::vector<float> m_, v_;
};

}  // namespace vesselpipe
