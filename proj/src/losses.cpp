#include "ovmix/losses.hpp"

#include <cmath>

#include "ovmix/error.hpp"

namespace ovmix {

std::string to_string(ProxyVariant v) {
    switch (v) {
        case ProxyVariant::l1: return "l1";
        case ProxyVariant::l2: return "l2";
        case ProxyVariant::cosine: return "cosine";
    }
    return "?";
}

ProxyVariant proxy_variant_from_string(const std::string& s) {
    if (s == "l1") return ProxyVariant::l1;
    if (s == "l2") return ProxyVariant::l2;
    if (s == "cosine") return ProxyVariant::cosine;
    throw ConfigError("unknown proxy variant \"" + s + "\"");
}

void validate(const LossSpec& spec) {
    if (!(spec.proxy_weight >= 0.0) || !std::isfinite(spec.proxy_weight)) {
        throw ConfigError("proxy_weight must be finite and >= 0");
    }
    if (!(spec.bce_logit_scale > 0.0) || !std::isfinite(spec.bce_logit_scale)) {
        throw ConfigError("bce_logit_scale must be finite and > 0");
    }
    if (!(spec.distill_weight >= 0.0) || !std::isfinite(spec.distill_weight)) {
        throw ConfigError("distill_weight must be finite and >= 0");
    }
}

namespace {

void check_dims(const Embedding& a, const Embedding& b, const char* who) {
    if (a.dim() != b.dim()) {
        throw DimensionMismatch(std::string(who) + ": dimensions " + std::to_string(a.dim()) +
                                " vs " + std::to_string(b.dim()));
    }
}

double softplus(double x) {
    return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

double proxy_loss(const Embedding& text, const Embedding& visual, ProxyVariant variant) {
    check_dims(text, visual, "proxy_loss");
    const Eigen::VectorXd& t = text.values();
    const Eigen::VectorXd& r = visual.values();
    switch (variant) {
        case ProxyVariant::l1: return (t - r).lpNorm<1>();
        case ProxyVariant::l2: return (t - r).norm();
        case ProxyVariant::cosine: return 1.0 - cosine_sim(text, visual);
    }
    return 0.0;
}

PairLossGrad proxy_loss_grad(const Embedding& text, const Embedding& visual,
                             ProxyVariant variant) {
    check_dims(text, visual, "proxy_loss_grad");
    const Eigen::VectorXd& t = text.values();
    const Eigen::VectorXd& r = visual.values();
    PairLossGrad out;
    switch (variant) {
        case ProxyVariant::l1: {
            out.value = (t - r).lpNorm<1>();
            out.grad_visual = (r - t).array().sign().matrix();
            out.grad_text = -out.grad_visual;
            break;
        }
        case ProxyVariant::l2: {
            const Eigen::VectorXd diff = r - t;
            out.value = diff.norm();
            if (out.value > kNormZeroEps) {
                out.grad_visual = diff / out.value;
            } else {
                out.grad_visual = Eigen::VectorXd::Zero(r.size());
            }
            out.grad_text = -out.grad_visual;
            break;
        }
        case ProxyVariant::cosine: {
            const double nt = t.norm();
            const double nr = r.norm();
            if (nt <= kNormZeroEps || nr <= kNormZeroEps) {
                throw NearZeroNorm("proxy_loss_grad(cosine): zero-norm operand");
            }
            const double dot = t.dot(r);
            out.value = 1.0 - std::clamp(dot / (nt * nr), -1.0, 1.0);
            // d/dr [dot/(nt*nr)] = t/(nt*nr) - dot * r / (nt * nr^3)
            out.grad_visual = -(t / (nt * nr) - dot * r / (nt * nr * nr * nr));
            out.grad_text = -(r / (nt * nr) - dot * t / (nr * nt * nt * nt));
            break;
        }
    }
    return out;
}

BceLossGrad bce_class_loss(const Embedding& region, int label, const ClassRegistry& registry,
                           double scale) {
    if (!registry.contains(label) || registry.by_id(label).group != ClassGroup::base) {
        throw UnknownClass("bce_class_loss: label " + std::to_string(label) +
                           " is not a base class");
    }
    const Eigen::VectorXd& r = region.values();
    if (r.size() != registry.dimension()) {
        throw DimensionMismatch("bce_class_loss: region dim " + std::to_string(r.size()) +
                                " != registry dim " + std::to_string(registry.dimension()));
    }
    const double nr = r.norm();
    if (nr <= kNormZeroEps) {
        throw NearZeroNorm("bce_class_loss: zero-norm region");
    }

    BceLossGrad out;
    out.grad_region = Eigen::VectorXd::Zero(r.size());
    std::size_t n_base = 0;
    for (const auto& rec : registry.records()) {
        if (rec.group != ClassGroup::base) continue;
        ++n_base;
        const Eigen::VectorXd& t = rec.text_embedding.values();
        const double cos = r.dot(t) / nr;  // text rows are unit norm
        const double z = scale * cos;
        const double y = rec.id == label ? 1.0 : 0.0;
        out.value += y * softplus(-z) + (1.0 - y) * softplus(z);
        // dBCE/dz = sigmoid(z) - y; dcos/dr = (t - cos * r / nr) / nr
        out.grad_region += (sigmoid(z) - y) * scale / nr * (t - cos / nr * r);
    }
    out.value /= static_cast<double>(n_base);
    out.grad_region /= static_cast<double>(n_base);
    return out;
}

double distill_loss(const Embedding& region, const Embedding& teacher) {
    check_dims(region, teacher, "distill_loss");
    return (region.values() - teacher.values()).lpNorm<1>();
}

PairLossGrad distill_loss_grad(const Embedding& region, const Embedding& teacher) {
    // Definitionally the l1 proxy distance.
    PairLossGrad g = proxy_loss_grad(teacher, region, ProxyVariant::l1);
    return g;
}

}  // namespace ovmix
