#include "ovmix/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <string>

#include "jsonfmt.hpp"
#include "ovmix/error.hpp"

namespace ovmix {

Embedding forward(const HeadParams& head, const Eigen::VectorXd& feature) {
    if (head.matrix.cols() != feature.size()) {
        throw DimensionMismatch("forward: head expects " + std::to_string(head.matrix.cols()) +
                                "-dim features, got " + std::to_string(feature.size()));
    }
    return l2_normalize(Eigen::VectorXd(head.matrix * feature));
}

Eigen::MatrixXd forward_vjp(const HeadParams& head, const Eigen::VectorXd& feature,
                            const Eigen::VectorXd& grad_out) {
    if (head.matrix.cols() != feature.size() || head.matrix.rows() != grad_out.size()) {
        throw DimensionMismatch("forward_vjp: shape mismatch");
    }
    const Eigen::VectorXd u = head.matrix * feature;
    const double n = u.norm();
    if (n <= kNormZeroEps) {
        throw NearZeroNorm("forward_vjp: degenerate raw embedding");
    }
    const Eigen::VectorXd r = u / n;
    const Eigen::VectorXd gu = (grad_out - grad_out.dot(r) * r) / n;
    return gu * feature.transpose();
}

void validate(const TrainConfig& config) {
    if (config.epochs < 1) throw ConfigError("epochs must be >= 1");
    if (config.batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(config.learning_rate > 0.0) || !std::isfinite(config.learning_rate)) {
        throw ConfigError("learning_rate must be finite and > 0");
    }
    if (!(config.weight_decay >= 0.0) || !std::isfinite(config.weight_decay)) {
        throw ConfigError("weight_decay must be finite and >= 0");
    }
    if (!(config.grad_clip > 0.0) || !std::isfinite(config.grad_clip)) {
        throw ConfigError("grad_clip must be finite and > 0");
    }
    if (!(config.weighting.temperature > 0.0) || !std::isfinite(config.weighting.temperature)) {
        throw ConfigError("weighting temperature must be finite and > 0");
    }
    if (!(config.teacher_sigma >= 0.0) || !std::isfinite(config.teacher_sigma)) {
        throw ConfigError("teacher_sigma must be finite and >= 0");
    }
    validate(config.mix);
    validate(config.loss);
}

MixPlan make_mix_plan(std::span<const RegionSample> batch, const ClassRegistry& registry,
                      const TrainConfig& config, Rng& rng) {
    MixPlan plan;
    if (config.loss.proxy_weight <= 0.0) return plan;

    std::set<int> present;
    for (const auto& s : batch) present.insert(s.class_id);
    if (present.size() < 2) {
        plan.skipped_insufficient = true;
        return plan;
    }
    const std::vector<int> ids(present.begin(), present.end());

    std::vector<Embedding> targets;
    if (config.mix.pair_strategy == PairStrategy::novel_nearest) {
        for (int id : registry.ids_of(ClassGroup::novel)) {
            targets.push_back(registry.by_id(id).text_embedding);
        }
    }
    plan.pairs = select_pairs(ids, registry, config.mix, targets, rng);

    if (config.mix.granularity == Granularity::instance_wise) {
        // Donors are drawn after all pairs, one (i-side, j-side) draw per pair
        // in pair order, uniform over that class's batch positions.
        std::map<int, std::vector<std::size_t>> by_class;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            by_class[batch[k].class_id].push_back(k);
        }
        plan.instance_donors.reserve(plan.pairs.size());
        for (const auto& pc : plan.pairs) {
            const auto& ri = by_class.at(pc.class_i);
            const auto& rj = by_class.at(pc.class_j);
            const std::size_t a = ri[rng.index(ri.size())];
            const std::size_t b = rj[rng.index(rj.size())];
            plan.instance_donors.emplace_back(a, b);
        }
    }
    return plan;
}

namespace {

struct BatchCache {
    Eigen::MatrixXd unit;    // M x B, column k is r_k = V(W x_k)
    Eigen::VectorXd norms;   // ||W x_k||
};

BatchCache embed_batch(const HeadParams& head, std::span<const RegionSample> batch) {
    BatchCache c;
    c.unit.resize(head.matrix.rows(), static_cast<Eigen::Index>(batch.size()));
    c.norms.resize(static_cast<Eigen::Index>(batch.size()));
    for (std::size_t k = 0; k < batch.size(); ++k) {
        if (batch[k].feature.size() != head.matrix.cols()) {
            throw DimensionMismatch("embed_batch: sample " + std::to_string(k) + " has " +
                                    std::to_string(batch[k].feature.size()) +
                                    "-dim feature, head expects " +
                                    std::to_string(head.matrix.cols()));
        }
        const Eigen::VectorXd u = head.matrix * batch[k].feature;
        const double n = u.norm();
        if (n <= kNormZeroEps) {
            throw NearZeroNorm("embed_batch: degenerate embedding for sample " +
                               std::to_string(k));
        }
        c.unit.col(static_cast<Eigen::Index>(k)) = u / n;
        c.norms[static_cast<Eigen::Index>(k)] = n;
    }
    return c;
}

// Per-class prototype with everything the backward pass needs.
struct ProtoCache {
    std::vector<std::size_t> idx;  // batch positions, ascending
    std::vector<double> w;
    double qnorm = 0.0;            // ||sum_i w_i r_i||
    Eigen::VectorXd p;             // unit prototype
    Eigen::VectorXd grad_p;
};

void sgd_update(HeadParams& head, const Eigen::MatrixXd& grad, const TrainConfig& config) {
    Eigen::MatrixXd g = grad + config.weight_decay * head.matrix;
    const double n = g.norm();
    if (n > config.grad_clip) g *= config.grad_clip / n;
    head.matrix -= config.learning_rate * g;
}

}  // namespace

HeadObjective compute_head_objective(const HeadParams& head,
                                     std::span<const RegionSample> batch,
                                     const ClassRegistry& registry, const TrainConfig& config,
                                     const MixPlan& plan, std::span<const Embedding> teachers,
                                     HeadRole role) {
    if (batch.empty()) throw ConfigError("compute_head_objective: empty batch");
    const double b_count = static_cast<double>(batch.size());
    const BatchCache cache = embed_batch(head, batch);
    Eigen::MatrixXd grad_unit = Eigen::MatrixXd::Zero(cache.unit.rows(), cache.unit.cols());
    HeadObjective out;

    const bool with_bce = role == HeadRole::bce || !config.proxy_only;
    if (with_bce) {
        double acc = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const Eigen::Index ck = static_cast<Eigen::Index>(k);
            const BceLossGrad bce = bce_class_loss(Embedding::unit(cache.unit.col(ck)),
                                                   batch[k].class_id, registry,
                                                   config.loss.bce_logit_scale);
            acc += bce.value;
            grad_unit.col(ck) += bce.grad_region / b_count;
        }
        out.bce_term = acc / b_count;
        out.value += out.bce_term;
    }

    if (role == HeadRole::proxy && !plan.pairs.empty() && config.loss.proxy_weight > 0.0) {
        const bool class_wise = config.mix.granularity == Granularity::class_wise;
        if (!class_wise && plan.instance_donors.size() != plan.pairs.size()) {
            throw ConfigError("mix plan lacks instance donors");
        }
        const double p_count = static_cast<double>(plan.pairs.size());
        const double pw = config.loss.proxy_weight;

        std::map<int, ProtoCache> protos;
        if (class_wise) {
            std::set<int> needed;
            for (const auto& pc : plan.pairs) {
                needed.insert(pc.class_i);
                needed.insert(pc.class_j);
            }
            for (int c : needed) {
                ProtoCache pr;
                for (std::size_t k = 0; k < batch.size(); ++k) {
                    if (batch[k].class_id == c) pr.idx.push_back(k);
                }
                if (pr.idx.empty()) {
                    throw EmptyClass("proxy pair references class " + std::to_string(c) +
                                     " absent from the batch");
                }
                std::vector<RegionObs> obs;
                obs.reserve(pr.idx.size());
                for (std::size_t k : pr.idx) {
                    obs.push_back({Embedding::unit(cache.unit.col(static_cast<Eigen::Index>(k))),
                                   batch[k].iou, batch[k].objectness});
                }
                pr.w = weights(obs, config.weighting);
                Eigen::VectorXd q = Eigen::VectorXd::Zero(cache.unit.rows());
                for (std::size_t t = 0; t < pr.idx.size(); ++t) {
                    q += pr.w[t] * cache.unit.col(static_cast<Eigen::Index>(pr.idx[t]));
                }
                pr.qnorm = q.norm();
                if (pr.qnorm <= kNormZeroEps) {
                    throw NearZeroNorm("prototype cancelled for class " + std::to_string(c));
                }
                pr.p = q / pr.qnorm;
                pr.grad_p = Eigen::VectorXd::Zero(cache.unit.rows());
                protos.emplace(c, std::move(pr));
            }
        }

        double acc = 0.0;
        for (std::size_t pi = 0; pi < plan.pairs.size(); ++pi) {
            const PairChoice& pc = plan.pairs[pi];
            const Embedding& text_i = registry.by_id(pc.class_i).text_embedding;
            const Embedding& text_j = registry.by_id(pc.class_j).text_embedding;

            Eigen::VectorXd a;
            Eigen::VectorXd b;
            std::size_t donor_a = 0;
            std::size_t donor_b = 0;
            ProxyPair mixed;
            if (class_wise) {
                const ProtoCache& pri = protos.at(pc.class_i);
                const ProtoCache& prj = protos.at(pc.class_j);
                a = pri.p;
                b = prj.p;
                mixed = mix_pair(Prototype{pc.class_i, Embedding::unit(a), pri.idx.size()},
                                 Prototype{pc.class_j, Embedding::unit(b), prj.idx.size()},
                                 text_i, text_j, pc.lambda);
            } else {
                donor_a = plan.instance_donors[pi].first;
                donor_b = plan.instance_donors[pi].second;
                if (donor_a >= batch.size() || donor_b >= batch.size()) {
                    throw ConfigError("mix plan donor index out of range");
                }
                a = cache.unit.col(static_cast<Eigen::Index>(donor_a));
                b = cache.unit.col(static_cast<Eigen::Index>(donor_b));
                mixed = instance_mixup(Embedding::unit(a), pc.class_i, Embedding::unit(b),
                                       pc.class_j, text_i, text_j, pc.lambda);
            }

            const PairLossGrad plg =
                proxy_loss_grad(mixed.textual, mixed.visual, config.loss.proxy_variant);
            acc += plg.value;

            // Route the visual gradient back through the mix. Endpoint lambdas
            // return an input verbatim, so the chain there is the identity.
            const Eigen::VectorXd gv = (pw / p_count) * plg.grad_visual;
            Eigen::VectorXd ga = Eigen::VectorXd::Zero(a.size());
            Eigen::VectorXd gb = Eigen::VectorXd::Zero(b.size());
            if (pc.lambda == 1.0) {
                ga = gv;
            } else if (pc.lambda == 0.0) {
                gb = gv;
            } else {
                const Eigen::VectorXd h = pc.lambda * a + (1.0 - pc.lambda) * b;
                const double g = h.norm();
                const Eigen::VectorXd& mv = mixed.visual.values();
                const Eigen::VectorXd gh = (gv - gv.dot(mv) * mv) / g;
                ga = pc.lambda * gh;
                gb = (1.0 - pc.lambda) * gh;
            }
            if (class_wise) {
                protos.at(pc.class_i).grad_p += ga;
                protos.at(pc.class_j).grad_p += gb;
            } else {
                grad_unit.col(static_cast<Eigen::Index>(donor_a)) += ga;
                grad_unit.col(static_cast<Eigen::Index>(donor_b)) += gb;
            }
        }
        out.proxy_term = acc / p_count;
        out.value += pw * out.proxy_term;

        // Prototype backward: through q / ||q|| into the member columns. The
        // weights depend only on iou/objectness, never on the head.
        for (const auto& [c, pr] : protos) {
            const Eigen::VectorXd gq = (pr.grad_p - pr.grad_p.dot(pr.p) * pr.p) / pr.qnorm;
            for (std::size_t t = 0; t < pr.idx.size(); ++t) {
                grad_unit.col(static_cast<Eigen::Index>(pr.idx[t])) += pr.w[t] * gq;
            }
        }
    }

    if (role == HeadRole::proxy && config.loss.distill_weight > 0.0) {
        if (teachers.size() != batch.size()) {
            throw ConfigError("distillation teachers must align with the batch");
        }
        double acc = 0.0;
        for (std::size_t k = 0; k < batch.size(); ++k) {
            const Eigen::Index ck = static_cast<Eigen::Index>(k);
            const PairLossGrad dg =
                distill_loss_grad(Embedding::unit(cache.unit.col(ck)), teachers[k]);
            acc += dg.value;
            grad_unit.col(ck) += (config.loss.distill_weight / b_count) * dg.grad_visual;
        }
        out.distill_term = acc / b_count;
        out.value += config.loss.distill_weight * out.distill_term;
    }

    // One normalization-Jacobian pass from the unit embeddings down to the
    // matrix: grad_W = sum_k J_V(u_k)^T g_k x_k^T.
    out.grad = Eigen::MatrixXd::Zero(head.matrix.rows(), head.matrix.cols());
    for (std::size_t k = 0; k < batch.size(); ++k) {
        const Eigen::Index ck = static_cast<Eigen::Index>(k);
        const Eigen::VectorXd r = cache.unit.col(ck);
        const Eigen::VectorXd gu = (grad_unit.col(ck) - grad_unit.col(ck).dot(r) * r) / cache.norms[ck];
        out.grad.noalias() += gu * batch[k].feature.transpose();
    }
    return out;
}

StepReport train_step(HeadParams& bce_head, HeadParams& proxy_head,
                      std::span<const RegionSample> batch, const ClassRegistry& registry,
                      const TrainConfig& config, Rng& rng,
                      std::span<const Embedding> teachers) {
    const MixPlan plan = make_mix_plan(batch, registry, config, rng);
    const HeadObjective bce_obj =
        compute_head_objective(bce_head, batch, registry, config, plan, {}, HeadRole::bce);
    const HeadObjective proxy_obj = compute_head_objective(proxy_head, batch, registry, config,
                                                           plan, teachers, HeadRole::proxy);
    sgd_update(bce_head, bce_obj.grad, config);
    sgd_update(proxy_head, proxy_obj.grad, config);

    StepReport rep;
    rep.bce_loss = bce_obj.bce_term;
    rep.proxy_loss = proxy_obj.proxy_term;
    rep.proxy_pairs = static_cast<int>(plan.pairs.size());
    rep.proxy_skipped = plan.skipped_insufficient;
    return rep;
}

FitResult fit(const TrainConfig& config, const ClassRegistry& registry,
              const std::vector<RegionSample>& train_samples) {
    validate(config);
    if (train_samples.empty()) throw ConfigError("fit: no training samples");
    const Eigen::Index f_dim = train_samples.front().feature.size();
    for (const auto& s : train_samples) {
        if (s.feature.size() != f_dim) {
            throw DimensionMismatch("fit: inconsistent feature dimensions");
        }
        if (!registry.contains(s.class_id) ||
            registry.by_id(s.class_id).group != ClassGroup::base) {
            throw UnknownClass("fit: training sample labeled with non-base class " +
                               std::to_string(s.class_id));
        }
    }

    FitResult res;
    {
        // Both heads start from the same draw (row-major order) so that a run
        // with proxy_weight 0 keeps them bitwise identical forever.
        Rng init(derive_seed(config.seed, "init"));
        const double sd = 1.0 / std::sqrt(static_cast<double>(f_dim));
        Eigen::MatrixXd w(registry.dimension(), f_dim);
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) {
                w(r, c) = sd * init.normal();
            }
        }
        res.bce_head.matrix = w;
        res.proxy_head.matrix = std::move(w);
    }

    std::vector<Embedding> teachers;
    if (config.loss.distill_weight > 0.0) {
        Rng trng(derive_seed(config.seed, "teachers"));
        teachers = make_teachers(train_samples, registry, config.teacher_sigma, trng);
    }

    Rng stream(derive_seed(config.seed, "train"));
    std::vector<std::size_t> order(train_samples.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    const std::size_t bs = static_cast<std::size_t>(config.batch_size);

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        stream.shuffle(order);
        double bce_acc = 0.0;
        double proxy_acc = 0.0;
        std::size_t steps = 0;
        for (std::size_t start = 0; start < order.size(); start += bs) {
            const std::size_t stop = std::min(order.size(), start + bs);
            std::vector<RegionSample> batch;
            std::vector<Embedding> tbatch;
            batch.reserve(stop - start);
            for (std::size_t t = start; t < stop; ++t) {
                batch.push_back(train_samples[order[t]]);
                if (!teachers.empty()) tbatch.push_back(teachers[order[t]]);
            }
            const StepReport rep =
                train_step(res.bce_head, res.proxy_head, batch, registry, config, stream, tbatch);
            bce_acc += rep.bce_loss;
            proxy_acc += rep.proxy_loss;
            ++steps;
        }
        res.log.push_back({epoch, bce_acc / static_cast<double>(steps),
                           proxy_acc / static_cast<double>(steps)});
    }
    return res;
}

void save_head(const HeadParams& head, const std::filesystem::path& path) {
    std::string out = "{\"feature_dim\":" + std::to_string(head.matrix.cols()) +
                      ",\"embedding_dim\":" + std::to_string(head.matrix.rows()) +
                      ",\"matrix\":[";
    for (Eigen::Index r = 0; r < head.matrix.rows(); ++r) {
        if (r) out += ',';
        const Eigen::VectorXd row = head.matrix.row(r).transpose();
        detail::append_double_array(out, row);
    }
    out += "]}\n";
    detail::write_text_file(path, out);
}

HeadParams load_head(const std::filesystem::path& path) {
    const nlohmann::json j = detail::parse_json_file(path);
    if (!j.is_object() || !j.contains("feature_dim") || !j.contains("embedding_dim") ||
        !j.contains("matrix")) {
        throw SchemaError("head file needs feature_dim, embedding_dim, matrix: " +
                          path.string());
    }
    if (!j["feature_dim"].is_number_integer() || !j["embedding_dim"].is_number_integer()) {
        throw SchemaError("head dimensions must be integers: " + path.string());
    }
    const Eigen::Index f_dim = j["feature_dim"].get<Eigen::Index>();
    const Eigen::Index m_dim = j["embedding_dim"].get<Eigen::Index>();
    if (f_dim < 1 || m_dim < 1) {
        throw SchemaError("head dimensions must be positive: " + path.string());
    }
    const auto& rows = j["matrix"];
    if (!rows.is_array() || static_cast<Eigen::Index>(rows.size()) != m_dim) {
        throw SchemaError("head matrix must have embedding_dim rows: " + path.string());
    }
    HeadParams head;
    head.matrix.resize(m_dim, f_dim);
    for (Eigen::Index r = 0; r < m_dim; ++r) {
        const auto& row = rows[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != f_dim) {
            throw SchemaError("head matrix row " + std::to_string(r) +
                              " must have feature_dim entries: " + path.string());
        }
        for (Eigen::Index c = 0; c < f_dim; ++c) {
            const auto& cell = row[static_cast<std::size_t>(c)];
            if (!cell.is_number()) {
                throw SchemaError("head matrix entries must be numbers: " + path.string());
            }
            const double v = cell.get<double>();
            if (!std::isfinite(v)) {
                throw SchemaError("head matrix entries must be finite: " + path.string());
            }
            head.matrix(r, c) = v;
        }
    }
    return head;
}

}  // namespace ovmix
