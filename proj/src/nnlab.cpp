// Copyright 2026 The psens Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <psens/nnlab.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

#include <psens/diff.hpp>
#include <psens/rng.hpp>

namespace psens::nn
{

namespace
{

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::span<double> as_span(Eigen::VectorXd &v)
{
    return {v.data(), static_cast<std::size_t>(v.size())};
}

// Input buffer laid out as (params, pixels, label).
class SampleBinder
{
public:
    explicit SampleBinder(const Eigen::VectorXd &weights) : m_buffer(kParams + kPixels + 1)
    {
        if (weights.size() != kParams) {
            throw Error("expected " + std::to_string(kParams) + " weights, got " + std::to_string(weights.size()));
        }
        m_buffer.head(kParams) = weights;
    }

    void set_weights(const Eigen::VectorXd &weights) { m_buffer.head(kParams) = weights; }

    std::span<const double> bind(const double *pixels, double label)
    {
        std::copy(pixels, pixels + kPixels, m_buffer.data() + kParams);
        m_buffer[kParams + kPixels] = label;
        return as_span(m_buffer);
    }

    std::span<const double> bind_pixels(const double *pixels)
    {
        std::copy(pixels, pixels + kPixels, m_buffer.data() + kParams);
        return {m_buffer.data(), static_cast<std::size_t>(kParams + kPixels)};
    }

private:
    Eigen::VectorXd m_buffer;
};

} // namespace

void DataSpec::validate() const
{
    if (n_train_per_class < 0 || n_test_per_class < 0) {
        throw Error("sample counts must be non-negative");
    }
    if (!(noise_std >= 0.0) || !std::isfinite(noise_std)) {
        throw Error("noise_std must be finite and non-negative");
    }
}

std::string_view to_string(Split s) noexcept
{
    return s == Split::kTrain ? "train" : "test";
}

Eigen::VectorXd base_image(Label label)
{
    Eigen::VectorXd img = Eigen::VectorXd::Ones(kPixels);
    for (int k = 0; k < kSide; ++k) {
        const int idx = label == Label::kVertical ? k * kSide + kBarIndex : kBarIndex * kSide + k;
        img[idx] = 0.0;
    }
    return img;
}

SyntheticData gen_synthetic(const DataSpec &spec)
{
    spec.validate();
    CounterRng rng(spec.seed, Stream::kData);

    auto fill = [&](Dataset &d, int per_class, Split split) {
        d.split = split;
        d.images.resize(2 * per_class, kPixels);
        d.labels.resize(2 * per_class);
        for (int c = 0; c < 2; ++c) {
            const Eigen::VectorXd base = base_image(static_cast<Label>(c));
            for (int i = 0; i < per_class; ++i) {
                const Eigen::Index row = c * per_class + i;
                for (int p = 0; p < kPixels; ++p) {
                    d.images(row, p) = base[p] + spec.noise_std * rng.normal();
                }
                d.labels[row] = c;
            }
        }
    };

    SyntheticData out;
    out.spec = spec;
    // Generation order: class 0 train, class 1 train, class 0 test, class 1 test.
    fill(out.train, spec.n_train_per_class, Split::kTrain);
    fill(out.test, spec.n_test_per_class, Split::kTest);
    return out;
}

std::vector<std::string> ModelGraph::program_inputs() const
{
    std::vector<std::string> in = param_vars;
    in.insert(in.end(), input_vars.begin(), input_vars.end());
    in.push_back(label_var);
    return in;
}

const Program &ModelGraph::training_program()
{
    if (!m_training) {
        const GradientMap grad = gradient(graph, loss_root, param_vars);
        NamedNodes roots;
        roots.reserve(grad.size() + 1);
        roots.emplace_back("loss", loss_root);
        for (const auto &[name, id] : grad.entries) {
            roots.emplace_back("d_" + name, id);
        }
        m_training = compile(graph, roots, program_inputs());
    }
    return *m_training;
}

const Program &ModelGraph::probability_program()
{
    if (!m_probability) {
        std::vector<std::string> in = param_vars;
        in.insert(in.end(), input_vars.begin(), input_vars.end());
        const NamedNode root{"p", prob_root};
        m_probability = compile(graph, std::span<const NamedNode>(&root, 1), in);
    }
    return *m_probability;
}

const Program &ModelGraph::ps_program(PsVariant variant)
{
    auto &slot = m_ps[static_cast<std::size_t>(variant)];
    if (!slot) {
        const SensitivityBundle b = sensitivity_bundle(graph, loss_root, input_vars);
        NamedNodes roots;
        for (const auto &[name, id] : b.partial_sensitivity(variant)) {
            roots.emplace_back("ps_" + name, id);
        }
        roots.emplace_back("grad_norm", b.grad_norm);
        slot = compile(graph, roots, program_inputs());
    }
    return *slot;
}

ModelGraph build_mlp(ExprGraph graph)
{
    ModelGraph m(std::move(graph));
    ExprGraph &g = m.graph;

    for (int k = 0; k < kParams; ++k) {
        m.param_vars.push_back("w" + std::to_string(k));
    }
    for (int p = 0; p < kPixels; ++p) {
        m.input_vars.push_back("x" + std::to_string(p));
    }
    auto w = [&](int k) { return g.variable(m.param_vars[static_cast<std::size_t>(k)]); };

    std::vector<NodeId> x;
    for (const auto &name : m.input_vars) {
        x.push_back(g.variable(name));
    }
    const NodeId y = g.variable(m.label_var);

    std::vector<NodeId> h1(kHidden);
    for (int j = 0; j < kHidden; ++j) {
        NodeId acc = g.constant(0.0);
        for (int i = 0; i < kPixels; ++i) {
            acc = g.add(acc, g.mul(w(kW1Offset + i * kHidden + j), x[static_cast<std::size_t>(i)]));
        }
        h1[static_cast<std::size_t>(j)] = g.sigmoid(acc);
    }

    std::vector<NodeId> h2(kHidden);
    for (int k = 0; k < kHidden; ++k) {
        NodeId acc = g.constant(0.0);
        for (int j = 0; j < kHidden; ++j) {
            acc = g.add(acc, g.mul(w(kW2Offset + j * kHidden + k), h1[static_cast<std::size_t>(j)]));
        }
        h2[static_cast<std::size_t>(k)] = g.sigmoid(g.add(acc, w(kB2Offset + k)));
    }

    NodeId z = g.constant(0.0);
    for (int k = 0; k < kHidden; ++k) {
        z = g.add(z, g.mul(w(kW3Offset + k), h2[static_cast<std::size_t>(k)]));
    }
    const NodeId p = g.sigmoid(z);
    m.prob_root = p;

    const NodeId one = g.constant(1.0);
    const NodeId pos = g.mul(y, g.ln(p));
    const NodeId negative = g.mul(g.sub(one, y), g.ln(g.sub(one, p)));
    m.loss_root = g.neg(g.add(pos, negative));
    return m;
}

std::string_view to_string(Optimizer o) noexcept
{
    return o == Optimizer::kSgd ? "sgd" : "dpsgd";
}

Optimizer parse_optimizer(std::string_view text)
{
    if (text == "sgd") {
        return Optimizer::kSgd;
    }
    if (text == "dpsgd") {
        return Optimizer::kDpSgd;
    }
    throw Error("unknown optimizer '" + std::string(text) + "' (expected sgd or dpsgd)");
}

NumericalFailure::NumericalFailure(Eigen::Index sample, int epoch)
    : Error("undefined loss or gradient at sample " + std::to_string(sample) + " (epoch " + std::to_string(epoch)
            + ")"),
      m_sample(sample), m_epoch(epoch)
{
}

Eigen::VectorXd init_weights(std::uint64_t seed)
{
    CounterRng rng(seed, Stream::kWeightInit);
    Eigen::VectorXd w(kParams);
    auto fill = [&](int offset, int count, int fan_in) {
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (int k = 0; k < count; ++k) {
            w[offset + k] = (2.0 * rng.uniform() - 1.0) * bound;
        }
    };
    fill(kW1Offset, kPixels * kHidden, kPixels);
    fill(kW2Offset, kHidden * kHidden, kHidden);
    fill(kB2Offset, kHidden, kHidden);
    fill(kW3Offset, kHidden, kHidden);
    return w;
}

double accuracy(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &data)
{
    if (data.size() == 0) {
        return kNaN;
    }
    Evaluator ev(model.probability_program());
    SampleBinder binder(weights);
    Eigen::Index correct = 0;
    double p = 0.0;
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        ev.run(binder.bind_pixels(data.images.row(r).data()), std::span<double>(&p, 1));
        const int predicted = p >= 0.5 ? 1 : 0;
        correct += predicted == data.labels[r] ? 1 : 0;
    }
    return static_cast<double>(correct) / static_cast<double>(data.size());
}

double mean_loss(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &data)
{
    if (data.size() == 0) {
        throw Error("mean_loss of an empty dataset");
    }
    const Program &prog = model.training_program();
    Evaluator ev(prog);
    SampleBinder binder(weights);
    Eigen::VectorXd out(static_cast<Eigen::Index>(prog.outputs().size()));
    double sum = 0.0;
    for (Eigen::Index r = 0; r < data.size(); ++r) {
        ev.run(binder.bind(data.images.row(r).data(), data.labels[r]), as_span(out));
        sum += out[0];
    }
    return sum / static_cast<double>(data.size());
}

namespace
{

TrainResult run_training(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg)
{
    if (train.size() == 0) {
        throw Error("training set is empty");
    }
    if (!(cfg.learning_rate >= 0.0) || !std::isfinite(cfg.learning_rate)) {
        throw Error("learning rate must be finite and non-negative");
    }
    if (cfg.max_epochs < 1) {
        throw Error("max_epochs must be at least 1");
    }
    const bool dp = cfg.optimizer == Optimizer::kDpSgd;
    DpSgdParams dp_params = cfg.dp;
    if (dp) {
        dp_params.learning_rate = cfg.learning_rate;
        dp_params.validate();
        if (dp_params.batch_size != static_cast<std::size_t>(train.size())) {
            throw Error("DP-SGD runs full-batch: batch_size must equal the training-set size ("
                        + std::to_string(train.size()) + ")");
        }
    }
    const CounterRng dp_root(dp_params.seed, Stream::kDpNoise);
    const double noise_std = dp_params.noise_multiplier * dp_params.clip_bound;

    const Program &prog = model.training_program();
    Evaluator ev(prog);
    TrainResult result;
    result.initial_weights = init_weights(cfg.init_seed);
    Eigen::VectorXd w = result.initial_weights;
    SampleBinder binder(w);

    Eigen::VectorXd out(static_cast<Eigen::Index>(prog.outputs().size()));
    Eigen::VectorXd grad_sum(kParams);
    Eigen::VectorXd clipped(kParams);
    double previous_loss = kNaN;

    for (int epoch = 0;; ++epoch) {
        binder.set_weights(w);
        grad_sum.setZero();
        double loss_sum = 0.0;
        for (Eigen::Index r = 0; r < train.size(); ++r) {
            ev.run(binder.bind(train.images.row(r).data(), train.labels[r]), as_span(out));
            if (!out.allFinite()) {
                throw NumericalFailure(r, epoch);
            }
            loss_sum += out[0];
            if (dp) {
                clipped = clip_l2(out.tail(kParams), dp_params.clip_bound);
                grad_sum += clipped;
            } else {
                grad_sum += out.tail(kParams);
            }
        }
        const double loss = loss_sum / static_cast<double>(train.size());
        result.log.push_back({epoch, loss, test ? accuracy(model, w, *test) : kNaN});
        if (cfg.record_trajectory) {
            result.trajectory.push_back(w);
        }
        result.epochs = epoch;

        if (epoch > 0 && std::abs(loss - previous_loss) < cfg.convergence_tol) {
            result.converged = true;
            break;
        }
        if (epoch == cfg.max_epochs) {
            break;
        }
        previous_loss = loss;

        if (dp) {
            CounterRng noise_rng = dp_root.substream(static_cast<std::uint64_t>(epoch));
            grad_sum += gaussian_noise(kParams, noise_std, noise_rng);
            w -= cfg.learning_rate * (grad_sum / static_cast<double>(dp_params.batch_size));
        } else {
            w -= cfg.learning_rate * (grad_sum / static_cast<double>(train.size()));
        }
    }
    result.weights = w;
    return result;
}

} // namespace

TrainResult train_sgd(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg)
{
    if (cfg.optimizer != Optimizer::kSgd) {
        throw Error("train_sgd requires optimizer = sgd");
    }
    return run_training(model, train, test, cfg);
}

TrainResult train_dpsgd(ModelGraph &model, const Dataset &train, const Dataset *test, const TrainConfig &cfg)
{
    if (cfg.optimizer != Optimizer::kDpSgd) {
        throw Error("train_dpsgd requires optimizer = dpsgd");
    }
    return run_training(model, train, test, cfg);
}

TrainResult train(ModelGraph &model, const Dataset &train_set, const Dataset *test, const TrainConfig &cfg)
{
    return cfg.optimizer == Optimizer::kSgd ? train_sgd(model, train_set, test, cfg)
                                            : train_dpsgd(model, train_set, test, cfg);
}

Eigen::VectorXd pixel_partial_sensitivity(ModelGraph &model, const Eigen::VectorXd &weights,
                                          std::span<const double> pixels, int label, PsVariant variant)
{
    if (pixels.size() != static_cast<std::size_t>(kPixels)) {
        throw Error("expected " + std::to_string(kPixels) + " pixels, got " + std::to_string(pixels.size()));
    }
    const Program &prog = model.ps_program(variant);
    Evaluator ev(prog);
    SampleBinder binder(weights);
    Eigen::VectorXd out(static_cast<Eigen::Index>(prog.outputs().size()));
    ev.run(binder.bind(pixels.data(), label), as_span(out));
    return out.head(kPixels);
}

PsReport ps_report(ModelGraph &model, const Eigen::VectorXd &weights, const Dataset &split, PsVariant variant,
                   int bins)
{
    if (split.size() == 0) {
        throw Error("cannot build a partial-sensitivity report from an empty " + std::string(to_string(split.split))
                    + " split");
    }
    if (bins < 1) {
        throw Error("histogram needs at least one bin");
    }
    const Program &prog = model.ps_program(variant);
    Evaluator ev(prog);
    SampleBinder binder(weights);

    const Eigen::Index n = split.size();
    PsReport rep;
    rep.variant = variant;
    rep.labels = split.labels;
    rep.per_sample_ps.resize(n, kPixels);
    rep.grad_norm.resize(n);
    Eigen::VectorXd out(static_cast<Eigen::Index>(prog.outputs().size()));
    for (Eigen::Index r = 0; r < n; ++r) {
        ev.run(binder.bind(split.images.row(r).data(), split.labels[r]), as_span(out));
        rep.per_sample_ps.row(r) = out.head(kPixels).transpose();
        rep.grad_norm[r] = out[kPixels];
    }

    rep.max_abs_map = RowMatrixXd::Constant(2, kPixels, kNaN);
    rep.min_signed = RowMatrixXd::Constant(2, kPixels, kNaN);
    rep.max_signed = RowMatrixXd::Constant(2, kPixels, kNaN);
    rep.undefined_counts = Eigen::VectorXi::Zero(kPixels);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (Eigen::Index r = 0; r < n; ++r) {
        const int c = split.labels[r];
        if (c < 0 || c > 1) {
            throw Error("label out of range at row " + std::to_string(r));
        }
        for (int p = 0; p < kPixels; ++p) {
            const double v = rep.per_sample_ps(r, p);
            if (std::isnan(v)) {
                ++rep.undefined_counts[p];
                continue;
            }
            lo = std::min(lo, v);
            hi = std::max(hi, v);
            auto update = [&](RowMatrixXd &m, double value, bool take_max) {
                double &cell = m(c, p);
                if (std::isnan(cell) || (take_max ? value > cell : value < cell)) {
                    cell = value;
                }
            };
            update(rep.max_abs_map, std::abs(v), true);
            update(rep.min_signed, v, false);
            update(rep.max_signed, v, true);
        }
    }

    rep.histogram = Eigen::MatrixXi::Zero(kPixels, bins);
    if (lo > hi) {
        // Nothing defined: degenerate unit-width edges.
        lo = 0.0;
        hi = 1.0;
    } else if (lo == hi) {
        lo -= 0.5;
        hi += 0.5;
    }
    rep.bin_edges.resize(bins + 1);
    for (int b = 0; b <= bins; ++b) {
        rep.bin_edges[b] = b == bins ? hi : lo + (hi - lo) * (static_cast<double>(b) / bins);
    }
    for (Eigen::Index r = 0; r < n; ++r) {
        for (int p = 0; p < kPixels; ++p) {
            const double v = rep.per_sample_ps(r, p);
            if (std::isnan(v)) {
                continue;
            }
            auto b = static_cast<int>(std::floor((v - lo) / (hi - lo) * bins));
            b = std::clamp(b, 0, bins - 1);
            ++rep.histogram(p, b);
        }
    }
    return rep;
}

DispersionSummary summarize_dispersion(const PsReport &report)
{
    const auto &ps = report.per_sample_ps;
    double abs_total = 0.0;
    Eigen::Index defined_total = 0;
    double ratio_sum = 0.0;
    int ratio_count = 0;
    for (Eigen::Index p = 0; p < ps.cols(); ++p) {
        double sum = 0.0;
        double abs_sum = 0.0;
        Eigen::Index m = 0;
        for (Eigen::Index r = 0; r < ps.rows(); ++r) {
            const double v = ps(r, p);
            if (!std::isnan(v)) {
                sum += v;
                abs_sum += std::abs(v);
                ++m;
            }
        }
        abs_total += abs_sum;
        defined_total += m;
        if (m < 2 || abs_sum == 0.0) {
            continue;
        }
        const double mean = sum / static_cast<double>(m);
        double ss = 0.0;
        for (Eigen::Index r = 0; r < ps.rows(); ++r) {
            const double v = ps(r, p);
            if (!std::isnan(v)) {
                ss += (v - mean) * (v - mean);
            }
        }
        const double sd = std::sqrt(ss / static_cast<double>(m - 1));
        ratio_sum += sd / (abs_sum / static_cast<double>(m));
        ++ratio_count;
    }
    return {defined_total > 0 ? abs_total / static_cast<double>(defined_total) : kNaN,
            ratio_count > 0 ? ratio_sum / ratio_count : kNaN};
}

} // namespace psens::nn
