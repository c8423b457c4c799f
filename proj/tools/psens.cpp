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

// psens: gradient-norm sensitivity analysis of expressions, individual RDP
// accounting and the pixel-sensitivity experiment on synthetic bar images.
//
// Exit codes: 0 success, 2 usage / parse / schema, 3 I/O, 4 numerical failure.

#include <charconv>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <psens/io.hpp>
#include <psens/nnlab.hpp>
#include <psens/optim.hpp>
#include <psens/parse.hpp>
#include <psens/privacy.hpp>
#include <psens/sens.hpp>

namespace
{

namespace fs = std::filesystem;
using nlohmann::json;
using namespace psens;

enum ExitCode : int { kOk = 0, kUsage = 2, kIo = 3, kNumerical = 4 };

class UsageError : public Error
{
public:
    using Error::Error;
};

class NumericalError : public Error
{
public:
    using Error::Error;
};

double parse_real(std::string_view text, const std::string &what)
{
    double v = 0.0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || end != text.data() + text.size() || !std::isfinite(v)) {
        throw UsageError("invalid number '" + std::string(text) + "' in " + what);
    }
    return v;
}

struct Range {
    std::string name;
    double lo;
    double hi;
};

// NAME=LO:HI
Range parse_range(const std::string &text)
{
    const auto eq = text.find('=');
    const auto colon = text.find(':', eq == std::string::npos ? 0 : eq);
    if (eq == std::string::npos || colon == std::string::npos) {
        throw UsageError("range '" + text + "' must look like NAME=LO:HI");
    }
    Range r{text.substr(0, eq), parse_real(std::string_view(text).substr(eq + 1, colon - eq - 1), "--range"),
            parse_real(std::string_view(text).substr(colon + 1), "--range")};
    if (!is_identifier(r.name)) {
        throw UsageError("range '" + text + "' has an invalid variable name");
    }
    return r;
}

// NAME=V
std::pair<std::string, double> parse_binding(const std::string &text)
{
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
        throw UsageError("binding '" + text + "' must look like NAME=VALUE");
    }
    return {text.substr(0, eq), parse_real(std::string_view(text).substr(eq + 1), "--at")};
}

std::string utc_timestamp()
{
    const std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

void ensure_dir(const fs::path &dir)
{
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) {
        throw io::IoError("cannot create output directory '" + dir.string() + "'");
    }
}

void write_metadata(const fs::path &dir, const std::string &command, const json &config, const json &seeds)
{
    io::write_json_file(dir / (command + "_metadata.json"), {
                                                                 {"tool", "psens"},
                                                                 {"version", io::kToolVersion},
                                                                 {"command", command},
                                                                 {"config", config},
                                                                 {"seeds", seeds},
                                                                 {"timestamp", utc_timestamp()},
                                                             });
}

// --- expression queries ---------------------------------------------------

struct Query {
    ExprGraph graph;
    NodeId root;
    std::vector<std::string> vars;
    std::optional<BoxDomain> box;
};

Query load_query(const std::string &expr, const std::vector<std::string> &range_args)
{
    Query q;
    const ParseResult parsed = parse_expression(q.graph, expr);
    q.root = parsed.root;
    q.vars = parsed.variables;

    std::map<std::string, Range> ranges;
    for (const auto &text : range_args) {
        Range r = parse_range(text);
        if (std::find(q.vars.begin(), q.vars.end(), r.name) == q.vars.end()) {
            throw UsageError("range given for '" + r.name + "', which does not occur in the expression");
        }
        if (!ranges.emplace(r.name, r).second) {
            throw UsageError("duplicate range for '" + r.name + "'");
        }
    }
    if (q.vars.empty()) {
        throw UsageError("the expression has no variables");
    }
    Eigen::VectorXd lo(static_cast<Eigen::Index>(q.vars.size()));
    Eigen::VectorXd hi(lo.size());
    for (std::size_t k = 0; k < q.vars.size(); ++k) {
        const auto it = ranges.find(q.vars[k]);
        if (it == ranges.end()) {
            throw UsageError("missing --range for variable '" + q.vars[k] + "'");
        }
        lo[static_cast<Eigen::Index>(k)] = it->second.lo;
        hi[static_cast<Eigen::Index>(k)] = it->second.hi;
    }
    q.box.emplace(q.vars, lo, hi);
    return q;
}

json ranges_json(const BoxDomain &box)
{
    json out = json::object();
    for (Eigen::Index k = 0; k < box.dim(); ++k) {
        out[box.names()[static_cast<std::size_t>(k)]] = {box.lower()[k], box.upper()[k]};
    }
    return out;
}

struct AnalyzeOptions {
    std::string expr;
    std::vector<std::string> ranges;
    int grid = 50;
    std::string variant = "fractional";
    std::string out = ".";
};

int cmd_analyze(const AnalyzeOptions &o)
{
    const PsVariant variant = parse_ps_variant(o.variant);
    Query q = load_query(o.expr, o.ranges);
    const BoxDomain &box = *q.box;
    if (o.grid < 2) {
        throw UsageError("--grid must be at least 2");
    }

    const MaximizeConfig cfg;
    const MaxResult best = global_sensitivity(q.graph, q.root, q.vars, box, cfg);
    if (!std::isfinite(best.value)) {
        throw NumericalError("the gradient norm is undefined everywhere on the search lattice");
    }

    const SensitivityBundle b = sensitivity_bundle(q.graph, q.root, q.vars);
    NamedNodes roots{{"grad_norm", b.grad_norm}};
    for (const auto &[name, id] : b.partial_sensitivity(variant)) {
        roots.emplace_back("ps_" + name, id);
    }
    const Program surface = compile(q.graph, roots, q.vars);
    const std::string csv = io::surface_csv(surface, box, o.grid);

    // The surface lattice doubles as a brute-force check on the maximizer.
    double surface_max = -INFINITY;
    {
        std::istringstream in(csv);
        std::string line;
        std::getline(in, line);
        const std::size_t col = q.vars.size();
        while (std::getline(in, line)) {
            std::size_t start = 0;
            for (std::size_t c = 0; c < col; ++c) {
                start = line.find(',', start) + 1;
            }
            const std::string cell = line.substr(start, line.find(',', start) - start);
            if (cell != "nan") {
                surface_max = std::max(surface_max, std::stod(cell));
            }
        }
    }

    const json analysis = {
        {"expression", o.expr},
        {"variables", q.vars},
        {"ranges", ranges_json(box)},
        {"variant", std::string(to_string(variant))},
        {"global_sensitivity", io::max_result_to_json(best, box)},
        {"maximizer",
         {{"method", "lattice multistart + projected gradient ascent"},
          {"grid_per_dim", cfg.grid_per_dim},
          {"top_k", cfg.top_k},
          {"ascent_steps", cfg.ascent_steps},
          {"step_init", 0.1 * (box.upper() - box.lower()).minCoeff()},
          {"tol", cfg.tol}}},
        {"summary",
         {{"delta2", best.value},
          {"surface_grid", o.grid},
          {"surface_max_grad_norm", surface_max},
          {"delta2_at_least_surface_max", best.value >= surface_max}}},
    };

    const fs::path dir(o.out);
    ensure_dir(dir);
    io::write_json_file(dir / "analysis.json", analysis);
    io::write_text_file(dir / "surface.csv", csv);
    write_metadata(dir, "analyze",
                   {{"expr", o.expr}, {"range", o.ranges}, {"grid", o.grid}, {"variant", o.variant}, {"out", o.out}},
                   json::object());
    std::cout << "delta2 = " << io::format_double(best.value) << " (" << (dir / "analysis.json").string() << ")\n";
    return kOk;
}

struct RdpOptions {
    std::string expr;
    std::vector<std::string> ranges;
    std::vector<std::string> at;
    double alpha = 2.0;
    double sigma = 1.0;
    double lphi = 1.0;
    std::string out;
};

int cmd_rdp(const RdpOptions &o)
{
    if (!(o.alpha > 1.0)) {
        throw UsageError("--alpha must be greater than 1");
    }
    if (!(o.sigma > 0.0)) {
        throw UsageError("--sigma must be positive");
    }
    Query q = load_query(o.expr, o.ranges);
    const BoxDomain &box = *q.box;

    std::map<std::string, double> point;
    for (const auto &text : o.at) {
        auto [name, value] = parse_binding(text);
        if (!point.emplace(name, value).second) {
            throw UsageError("duplicate --at binding for '" + name + "'");
        }
    }
    Eigen::VectorXd x(box.dim());
    for (std::size_t k = 0; k < q.vars.size(); ++k) {
        const auto it = point.find(q.vars[k]);
        if (it == point.end()) {
            throw UsageError("missing --at value for variable '" + q.vars[k] + "'");
        }
        x[static_cast<Eigen::Index>(k)] = it->second;
    }
    if (point.size() != q.vars.size()) {
        throw UsageError("--at names a variable that does not occur in the expression");
    }
    if (!box.contains(x)) {
        std::cerr << "warning: the evaluation point lies outside the declared ranges\n";
    }

    const GradientMap grad = gradient(q.graph, q.root, q.vars);
    const Program gp = compile(q.graph, grad.entries, q.vars);
    const EvalOutcome g = evaluate(gp, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
    if (!g.all_defined()) {
        throw NumericalError("the gradient is undefined at the evaluation point");
    }
    // The squared norm is the exact input to the RDP formula; no square root
    // round trip.
    double norm_sq = 0.0;
    for (Eigen::Index k = 0; k < g.values.size(); ++k) {
        norm_sq += g.values[k] * g.values[k];
    }
    const MechanismParams mech{.sigma = o.sigma, .lipschitz_agg = o.lphi};
    const RdpPoint eps = individual_rdp_from_squared_norm(o.alpha, mech, norm_sq);

    const MaxResult delta = global_sensitivity(q.graph, q.root, q.vars, box);
    if (!std::isfinite(delta.value)) {
        throw NumericalError("the gradient norm is undefined everywhere on the search lattice");
    }
    const json report = {
        {"grad_norm", std::sqrt(norm_sq)},
        {"alpha", eps.alpha},
        {"epsilon", eps.epsilon},
        {"sigma", o.sigma},
        {"global_sensitivity", delta.value},
        {"sigma_to_sensitivity_ratio", delta.value > 0 ? o.sigma / delta.value : INFINITY},
    };
    std::cout << report.dump(2) << "\n";
    if (!o.out.empty()) {
        const fs::path dir(o.out);
        ensure_dir(dir);
        io::write_json_file(dir / "rdp.json", report);
        write_metadata(dir, "rdp",
                       {{"expr", o.expr},
                        {"range", o.ranges},
                        {"at", o.at},
                        {"alpha", o.alpha},
                        {"sigma", o.sigma},
                        {"lphi", o.lphi},
                        {"out", o.out}},
                       json::object());
    }
    return kOk;
}

// --- pixel experiment -------------------------------------------------------

struct GenOptions {
    std::uint64_t seed = 7;
    int n_train_per_class = 1000;
    int n_test_per_class = 100;
    double noise_std = 0.2;
    std::string out = ".";
};

int cmd_gen(const GenOptions &o)
{
    nn::DataSpec spec;
    spec.seed = o.seed;
    spec.n_train_per_class = o.n_train_per_class;
    spec.n_test_per_class = o.n_test_per_class;
    spec.noise_std = o.noise_std;
    const nn::SyntheticData data = nn::gen_synthetic(spec);

    const fs::path dir(o.out);
    ensure_dir(dir);
    io::write_json_file(dir / "dataset.json", io::dataset_to_json(data));
    write_metadata(dir, "gen",
                   {{"seed", o.seed},
                    {"n_train_per_class", o.n_train_per_class},
                    {"n_test_per_class", o.n_test_per_class},
                    {"noise_std", o.noise_std},
                    {"out", o.out}},
                   {{"data", o.seed}});
    std::cout << "wrote " << data.train.size() << " train and " << data.test.size() << " test images to "
              << (dir / "dataset.json").string() << "\n";
    return kOk;
}

struct TrainOptions {
    std::string data = "dataset.json";
    std::string optimizer = "sgd";
    double learning_rate = 0.1;
    int max_epochs = 5000;
    double tol = 1e-7;
    std::uint64_t init_seed = 42;
    double clip_bound = 0.1;
    double noise_multiplier = 5.0;
    std::uint64_t dp_seed = 42;
    std::optional<std::size_t> batch_size;
    std::string out = ".";
};

int cmd_train(const TrainOptions &o)
{
    const nn::SyntheticData data = io::dataset_from_json(io::read_json_file(o.data));

    nn::TrainConfig cfg;
    cfg.optimizer = nn::parse_optimizer(o.optimizer);
    cfg.learning_rate = o.learning_rate;
    cfg.max_epochs = o.max_epochs;
    cfg.convergence_tol = o.tol;
    cfg.init_seed = o.init_seed;
    cfg.record_trajectory = false;
    cfg.dp.clip_bound = o.clip_bound;
    cfg.dp.noise_multiplier = o.noise_multiplier;
    cfg.dp.seed = o.dp_seed;
    cfg.dp.learning_rate = o.learning_rate;
    // Full-batch training: the batch is the whole training split.
    const auto n = static_cast<std::size_t>(data.train.size());
    if (o.batch_size && *o.batch_size != n) {
        throw UsageError("--batch-size must equal the training-set size (" + std::to_string(n)
                         + "); training is full-batch");
    }
    cfg.dp.batch_size = n;

    nn::ModelGraph model = nn::build_mlp();
    nn::TrainResult result;
    try {
        result = nn::train(model, data.train, &data.test, cfg);
    } catch (const nn::NumericalFailure &e) {
        throw NumericalError(std::string(e.what()) + "; sample index " + std::to_string(e.sample_index()));
    }

    const bool dp = cfg.optimizer == nn::Optimizer::kDpSgd;
    json seeds = {{"data", data.spec.seed}, {"init", o.init_seed}};
    if (dp) {
        seeds["dp_noise"] = o.dp_seed;
    }
    json training = {
        {"optimizer", o.optimizer},
        {"learning_rate", o.learning_rate},
        {"batch_size", n},
        {"max_epochs", o.max_epochs},
        {"convergence_tol", o.tol},
        {"init", "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))"},
        {"seeds", seeds},
        {"epochs", result.epochs},
        {"converged", result.converged},
        {"final_train_loss", result.log.back().train_loss},
        {"final_test_accuracy", result.log.back().test_accuracy},
    };
    if (dp) {
        training["clip_bound"] = o.clip_bound;
        training["noise_multiplier"] = o.noise_multiplier;
    }

    const fs::path dir(o.out);
    ensure_dir(dir);
    io::write_json_file(dir / "weights.json", io::weights_to_json(result.weights, training));
    io::write_text_file(dir / "training_log.csv", io::training_log_csv(result.log));
    write_metadata(dir, "train",
                   {{"data", o.data},
                    {"optimizer", o.optimizer},
                    {"learning_rate", o.learning_rate},
                    {"max_epochs", o.max_epochs},
                    {"tol", o.tol},
                    {"init_seed", o.init_seed},
                    {"clip_bound", o.clip_bound},
                    {"noise_multiplier", o.noise_multiplier},
                    {"dp_seed", o.dp_seed},
                    {"batch_size", n},
                    {"out", o.out}},
                   seeds);
    std::cout << o.optimizer << ": " << result.epochs << " epochs, train loss "
              << io::format_double(result.log.back().train_loss) << ", test accuracy "
              << io::format_double(result.log.back().test_accuracy) << "\n";
    return kOk;
}

struct PsReportOptions {
    std::string data = "dataset.json";
    std::string weights = "weights.json";
    std::string split = "train";
    std::string variant = "fractional";
    int bins = 50;
    std::string out = ".";
};

int cmd_ps_report(const PsReportOptions &o)
{
    if (o.split != "train" && o.split != "test") {
        throw UsageError("--split must be train or test");
    }
    if (o.bins < 1) {
        throw UsageError("--bins must be at least 1");
    }
    const PsVariant variant = parse_ps_variant(o.variant);
    const nn::SyntheticData data = io::dataset_from_json(io::read_json_file(o.data));
    const json weights_doc = io::read_json_file(o.weights);
    const Eigen::VectorXd weights = io::weights_from_json(weights_doc);
    const nn::Dataset &split = o.split == "train" ? data.train : data.test;
    if (split.size() == 0) {
        throw UsageError("the " + o.split + " split is empty");
    }

    nn::ModelGraph model = nn::build_mlp();
    const nn::PsReport rep = nn::ps_report(model, weights, split, variant, o.bins);
    const nn::DispersionSummary summary = nn::summarize_dispersion(rep);

    const fs::path dir(o.out);
    ensure_dir(dir);
    io::write_text_file(dir / "maxmap.csv", io::maxmap_csv(rep));
    io::write_text_file(dir / "hist.csv", io::hist_csv(rep));
    io::write_text_file(dir / "undefined_counts.csv", io::undefined_counts_csv(rep));
    json seeds = {{"data", data.spec.seed}};
    if (weights_doc.contains("training") && weights_doc["training"].contains("seeds")) {
        seeds["training"] = weights_doc["training"]["seeds"];
    }
    write_metadata(dir, "ps_report",
                   {{"data", o.data},
                    {"weights", o.weights},
                    {"split", o.split},
                    {"variant", o.variant},
                    {"bins", o.bins},
                    {"out", o.out}},
                   seeds);
    std::cout << "pooled mean |PS| " << io::format_double(summary.pooled_mean_abs) << ", normalized dispersion "
              << io::format_double(summary.normalized_dispersion) << "\n";
    return kOk;
}

// --- config files -----------------------------------------------------------

// Turns a JSON object mirroring the long flags of `sub` into extra arguments
// for every option the command line left unset.
std::vector<std::string> config_arguments(const CLI::App &sub, const fs::path &path)
{
    const json doc = io::read_json_file(path);
    if (!doc.is_object()) {
        throw io::SchemaError("config file '" + path.string() + "' must hold a JSON object");
    }
    auto scalar = [](const json &v) -> std::string {
        if (v.is_string()) {
            return v.get<std::string>();
        }
        if (v.is_number_float()) {
            return io::format_double(v.get<double>());
        }
        if (v.is_number() || v.is_boolean()) {
            return v.dump();
        }
        throw io::SchemaError("config values must be strings, numbers, booleans or arrays of those");
    };
    std::vector<std::string> args;
    for (const auto &[key, value] : doc.items()) {
        const std::string flag = "--" + key;
        const CLI::Option *opt = nullptr;
        try {
            opt = sub.get_option(flag);
        } catch (const CLI::OptionNotFound &) {
            throw UsageError("config key '" + key + "' is not an option of '" + sub.get_name() + "'");
        }
        if (key == "config") {
            throw UsageError("config files cannot include other config files");
        }
        if (opt->count() > 0) {
            continue; // the command line wins
        }
        const std::vector<json> values = value.is_array() ? value.get<std::vector<json>>() : std::vector<json>{value};
        for (const json &v : values) {
            args.push_back(flag);
            args.push_back(scalar(v));
        }
    }
    return args;
}

} // namespace

int main(int argc, char **argv)
{
    CLI::App app{"psens: gradient-norm sensitivity and individual privacy analysis"};
    app.set_version_flag("--version", io::kToolVersion);
    app.require_subcommand(1);

    std::string config_path;
    auto add_config = [&](CLI::App *sub) {
        sub->add_option("--config", config_path, "JSON file with option values; command-line flags take precedence");
    };

    AnalyzeOptions analyze;
    CLI::App *a = app.add_subcommand("analyze", "global sensitivity and partial-sensitivity surface of an expression");
    a->add_option("--expr", analyze.expr, "expression, e.g. \"a^2 + exp(2*b - a)\"")->required();
    a->add_option("--range", analyze.ranges, "NAME=LO:HI, one per variable")->delimiter(',');
    a->add_option("--grid", analyze.grid, "surface points per dimension")->capture_default_str();
    a->add_option("--variant", analyze.variant, "fractional or gradient")->capture_default_str();
    a->add_option("--out", analyze.out, "output directory")->capture_default_str();
    add_config(a);

    RdpOptions rdp;
    CLI::App *r = app.add_subcommand("rdp", "individual Renyi-DP loss of one record under the Gaussian mechanism");
    r->add_option("--expr", rdp.expr, "query expression")->required();
    r->add_option("--range", rdp.ranges, "NAME=LO:HI, one per variable")->delimiter(',');
    r->add_option("--at", rdp.at, "NAME=VALUE bindings of the record")->delimiter(',');
    r->add_option("--alpha", rdp.alpha, "Renyi order (> 1)")->capture_default_str();
    r->add_option("--sigma", rdp.sigma, "noise standard deviation")->capture_default_str();
    r->add_option("--lphi", rdp.lphi, "Lipschitz constant of the aggregation")->capture_default_str();
    r->add_option("--out", rdp.out, "optional directory for rdp.json and metadata");
    add_config(r);

    GenOptions gen;
    CLI::App *g = app.add_subcommand("gen", "generate the synthetic bar-image dataset");
    g->add_option("--seed", gen.seed, "data seed")->capture_default_str();
    g->add_option("--n-train-per-class", gen.n_train_per_class)->capture_default_str();
    g->add_option("--n-test-per-class", gen.n_test_per_class)->capture_default_str();
    g->add_option("--noise-std", gen.noise_std)->capture_default_str();
    g->add_option("--out", gen.out, "output directory")->capture_default_str();
    add_config(g);

    TrainOptions train;
    std::size_t batch_size = 0;
    CLI::App *t = app.add_subcommand("train", "full-batch SGD or DP-SGD training of the 25-8-8-1 MLP");
    t->add_option("--data", train.data, "dataset.json from gen")->capture_default_str();
    t->add_option("--optimizer", train.optimizer, "sgd or dpsgd")->capture_default_str();
    t->add_option("--learning-rate", train.learning_rate)->capture_default_str();
    t->add_option("--max-epochs", train.max_epochs)->capture_default_str();
    t->add_option("--tol", train.tol, "stop when |loss change| falls below this")->capture_default_str();
    t->add_option("--init-seed", train.init_seed)->capture_default_str();
    t->add_option("--clip-bound", train.clip_bound, "dpsgd per-sample L2 bound")->capture_default_str();
    t->add_option("--noise-multiplier", train.noise_multiplier, "dpsgd noise std / clip bound")->capture_default_str();
    t->add_option("--dp-seed", train.dp_seed, "dpsgd noise seed")->capture_default_str();
    CLI::Option *batch_opt = t->add_option("--batch-size", batch_size, "must equal the training-set size");
    t->add_option("--out", train.out, "output directory")->capture_default_str();
    add_config(t);

    PsReportOptions ps;
    CLI::App *p = app.add_subcommand("ps-report", "per-pixel partial sensitivity maps and histograms");
    p->add_option("--data", ps.data, "dataset.json from gen")->capture_default_str();
    p->add_option("--weights", ps.weights, "weights.json from train")->capture_default_str();
    p->add_option("--split", ps.split, "train or test")->capture_default_str();
    p->add_option("--variant", ps.variant, "fractional or gradient")->capture_default_str();
    p->add_option("--bins", ps.bins, "histogram bins")->capture_default_str();
    p->add_option("--out", ps.out, "output directory")->capture_default_str();
    add_config(p);

    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) {
        args.emplace_back(argv[i]); // CLI11 takes reversed vectors
    }
    try {
        try {
            std::vector<std::string> first = args; // parse() consumes its input
            app.parse(first);
            if (!config_path.empty()) {
                CLI::App *sub = app.get_subcommands().front();
                std::vector<std::string> extra = config_arguments(*sub, config_path);
                std::vector<std::string> all;
                for (auto it = extra.rbegin(); it != extra.rend(); ++it) {
                    all.push_back(*it);
                }
                all.insert(all.end(), args.begin(), args.end());
                // Reset bound values to their defaults before the second pass.
                analyze = AnalyzeOptions{};
                rdp = RdpOptions{};
                gen = GenOptions{};
                train = TrainOptions{};
                ps = PsReportOptions{};
                app.clear();
                app.parse(all);
            }
        } catch (const CLI::ParseError &e) {
            const int code = app.exit(e);
            return code == 0 ? kOk : kUsage;
        }
        if (batch_opt->count() > 0) {
            train.batch_size = batch_size;
        }

        CLI::App *sub = app.get_subcommands().front();
        const std::string name = sub->get_name();
        if (name == "analyze") {
            return cmd_analyze(analyze);
        }
        if (name == "rdp") {
            return cmd_rdp(rdp);
        }
        if (name == "gen") {
            return cmd_gen(gen);
        }
        if (name == "train") {
            return cmd_train(train);
        }
        return cmd_ps_report(ps);
    } catch (const ParseError &e) {
        std::cerr << "error: cannot parse expression: " << e.what() << "\n";
        return kUsage;
    } catch (const io::IoError &e) {
        std::cerr << "error: " << e.what() << "\n";
        return kIo;
    } catch (const NumericalError &e) {
        std::cerr << "error: numerical failure: " << e.what() << "\n";
        return kNumerical;
    } catch (const Error &e) {
        // Schema mismatches, invalid settings and usage problems.
        std::cerr << "error: " << e.what() << "\n";
        return kUsage;
    }
}
