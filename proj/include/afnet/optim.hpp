#pragma once

#include <cmath>
#include <vector>

#include "afnet/tensor.hpp"

namespace afnet {

// Step-decay schedule: lr0 * factor^floor(epoch / every).
inline double lr_at(int epoch, double lr0, double factor = 0.5, int every = 200) {
    if (epoch < 0) throw ParameterError("lr_at: epoch must be >= 0");
    return lr0 * std::pow(factor, double(epoch / every));
}

// Adam with bias-corrected moments (beta1 0.9, beta2 0.999, eps 1e-8).
// Moments are kept in the parameter order given at construction.
template <typename T>
class Adam {
public:
    Adam() = default;
    explicit Adam(std::vector<Tensor<T>> params, double beta1 = 0.9, double beta2 = 0.999,
                  double eps = 1e-8)
        : params_(std::move(params)), beta1_(beta1), beta2_(beta2), eps_(eps) {
        m_.resize(params_.size());
        v_.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            m_[i].assign(params_[i].numel(), T(0));
            v_[i].assign(params_[i].numel(), T(0));
        }
    }

    void zero_grad() {
        for (auto& p : params_) p.zero_grad();
    }

    void step(double lr) {
        ++t_;
        const double bc1 = 1.0 - std::pow(beta1_, double(t_));
        const double bc2 = 1.0 - std::pow(beta2_, double(t_));
        for (std::size_t i = 0; i < params_.size(); ++i) {
            auto& data = params_[i].data();
            auto& grad = params_[i].grad();
            auto& m = m_[i];
            auto& v = v_[i];
            for (std::size_t j = 0; j < data.size(); ++j) {
                const double g = double(grad[j]);
                m[j] = T(beta1_ * double(m[j]) + (1.0 - beta1_) * g);
                v[j] = T(beta2_ * double(v[j]) + (1.0 - beta2_) * g * g);
                const double mhat = double(m[j]) / bc1;
                const double vhat = double(v[j]) / bc2;
                data[j] = T(double(data[j]) - lr * mhat / (std::sqrt(vhat) + eps_));
            }
        }
    }

    int step_count() const { return t_; }
    void set_step_count(int t) { t_ = t; }

    std::vector<std::vector<T>>& first_moments() { return m_; }
    std::vector<std::vector<T>>& second_moments() { return v_; }
    const std::vector<std::vector<T>>& first_moments() const { return m_; }
    const std::vector<std::vector<T>>& second_moments() const { return v_; }
    const std::vector<Tensor<T>>& params() const { return params_; }

private:
    std::vector<Tensor<T>> params_;
    std::vector<std::vector<T>> m_, v_;
    double beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    int t_ = 0;
};

}  // namespace afnet
