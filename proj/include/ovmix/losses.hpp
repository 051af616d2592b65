#pragma once

#include <string>

#include <Eigen/Dense>

#include "ovmix/embedding.hpp"
#include "ovmix/registry.hpp"

namespace ovmix {

enum class ProxyVariant { l1, l2, cosine };

std::string to_string(ProxyVariant v);
ProxyVariant proxy_variant_from_string(const std::string& s);  // ConfigError

struct LossSpec {
    ProxyVariant proxy_variant = ProxyVariant::l1;
    double proxy_weight = 1.0;
    double bce_logit_scale = 50.0;
    double distill_weight = 0.0;
};

void validate(const LossSpec& spec);  // ConfigError

// Distance between the textual and visual embedding of a proxy class:
//   l1      sum_k |t_k - r_k|
//   l2      ||t - r||_2
//   cosine  1 - t.r / (||t|| ||r||)
double proxy_loss(const Embedding& text, const Embedding& visual, ProxyVariant variant);

struct PairLossGrad {
    double value = 0.0;
    Eigen::VectorXd grad_text;
    Eigen::VectorXd grad_visual;
};

// Loss plus analytic gradients with respect to both raw argument vectors (the
// cosine variant differentiates through the norm divisions, so central
// finite differences on the raw inputs agree). The l1 subgradient at kinks
// is 0 componentwise.
PairLossGrad proxy_loss_grad(const Embedding& text, const Embedding& visual,
                             ProxyVariant variant);

struct BceLossGrad {
    double value = 0.0;
    Eigen::VectorXd grad_region;
};

// Mean over base classes of BCE(sigmoid(scale * cos(region, T(c))), [c == label]).
// Throws UnknownClass when the label is missing or not a base class.
BceLossGrad bce_class_loss(const Embedding& region, int label, const ClassRegistry& registry,
                           double scale);

// L1 distance to a fixed teacher embedding (simplified distillation baseline).
double distill_loss(const Embedding& region, const Embedding& teacher);
PairLossGrad distill_loss_grad(const Embedding& region, const Embedding& teacher);

}  // namespace ovmix
