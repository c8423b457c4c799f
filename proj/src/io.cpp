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

#include <psens/io.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace psens::io
{

using nlohmann::json;

std::string format_double(double v)
{
    if (std::isnan(v)) {
        return "nan";
    }
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace
{

json split_to_json(const nn::Dataset &d)
{
    json images = json::array();
    for (Eigen::Index r = 0; r < d.size(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < d.images.cols(); ++c) {
            row.push_back(d.images(r, c));
        }
        images.push_back(std::move(row));
    }
    json labels = json::array();
    for (Eigen::Index r = 0; r < d.labels.size(); ++r) {
        labels.push_back(d.labels[r]);
    }
    return {{"images", std::move(images)}, {"labels", std::move(labels)}};
}

nn::Dataset split_from_json(const json &doc, nn::Split split, int expected_rows)
{
    const std::string where = std::string(nn::to_string(split));
    if (!doc.is_object() || !doc.contains("images") || !doc.contains("labels")) {
        throw SchemaError(where + " split: expected an object with 'images' and 'labels'");
    }
    const json &images = doc.at("images");
    const json &labels = doc.at("labels");
    if (!images.is_array() || !labels.is_array() || images.size() != labels.size()) {
        throw SchemaError(where + " split: 'images' and 'labels' must be arrays of equal length");
    }
    if (static_cast<int>(images.size()) != expected_rows) {
        throw SchemaError(where + " split: expected " + std::to_string(expected_rows) + " rows, found "
                          + std::to_string(images.size()));
    }
    nn::Dataset d;
    d.split = split;
    d.images.resize(static_cast<Eigen::Index>(images.size()), nn::kPixels);
    d.labels.resize(static_cast<Eigen::Index>(labels.size()));
    for (std::size_t r = 0; r < images.size(); ++r) {
        const json &row = images[r];
        if (!row.is_array() || row.size() != static_cast<std::size_t>(nn::kPixels)) {
            throw SchemaError(where + " split: image " + std::to_string(r) + " must have "
                              + std::to_string(nn::kPixels) + " pixels");
        }
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (!row[c].is_number()) {
                throw SchemaError(where + " split: non-numeric pixel in image " + std::to_string(r));
            }
            d.images(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c].get<double>();
        }
        if (!labels[r].is_number_integer() || (labels[r].get<int>() != 0 && labels[r].get<int>() != 1)) {
            throw SchemaError(where + " split: label " + std::to_string(r) + " must be 0 or 1");
        }
        d.labels[static_cast<Eigen::Index>(r)] = labels[r].get<int>();
    }
    return d;
}

template <typename T>
T required(const json &doc, const char *key)
{
    if (!doc.contains(key)) {
        throw SchemaError(std::string("missing key '") + key + "'");
    }
    try {
        return doc.at(key).get<T>();
    } catch (const json::exception &) {
        throw SchemaError(std::string("key '") + key + "' has the wrong type");
    }
}

} // namespace

json dataset_to_json(const nn::SyntheticData &data)
{
    json spec = {
        {"image_side", nn::kSide},
        {"n_train_per_class", data.spec.n_train_per_class},
        {"n_test_per_class", data.spec.n_test_per_class},
        {"noise_std", data.spec.noise_std},
        {"seed", data.spec.seed},
    };
    return {
        {"format", kDatasetFormat},
        {"spec", std::move(spec)},
        {"train", split_to_json(data.train)},
        {"test", split_to_json(data.test)},
    };
}

nn::SyntheticData dataset_from_json(const json &doc)
{
    if (!doc.is_object() || !doc.contains("format") || doc.at("format") != kDatasetFormat) {
        throw SchemaError(std::string("not a dataset document (expected format '") + kDatasetFormat + "')");
    }
    const json &spec = doc.at("spec");
    if (required<int>(spec, "image_side") != nn::kSide) {
        throw SchemaError("dataset image_side must be " + std::to_string(nn::kSide));
    }
    nn::SyntheticData out;
    out.spec.n_train_per_class = required<int>(spec, "n_train_per_class");
    out.spec.n_test_per_class = required<int>(spec, "n_test_per_class");
    out.spec.noise_std = required<double>(spec, "noise_std");
    out.spec.seed = required<std::uint64_t>(spec, "seed");
    if (!doc.contains("train") || !doc.contains("test")) {
        throw SchemaError("dataset must contain 'train' and 'test' splits");
    }
    out.train = split_from_json(doc.at("train"), nn::Split::kTrain, 2 * out.spec.n_train_per_class);
    out.test = split_from_json(doc.at("test"), nn::Split::kTest, 2 * out.spec.n_test_per_class);
    return out;
}

json weights_to_json(const Eigen::VectorXd &weights, const json &training)
{
    json w = json::array();
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        w.push_back(weights[i]);
    }
    json layout = {
        {"W1", {{"offset", nn::kW1Offset}, {"shape", {nn::kPixels, nn::kHidden}}}},
        {"W2", {{"offset", nn::kW2Offset}, {"shape", {nn::kHidden, nn::kHidden}}}},
        {"b2", {{"offset", nn::kB2Offset}, {"shape", {nn::kHidden}}}},
        {"W3", {{"offset", nn::kW3Offset}, {"shape", {nn::kHidden, 1}}}},
    };
    return {
        {"format", kWeightsFormat},
        {"layout", std::move(layout)},
        {"training", training},
        {"weights", std::move(w)},
    };
}

Eigen::VectorXd weights_from_json(const json &doc)
{
    if (!doc.is_object() || !doc.contains("format") || doc.at("format") != kWeightsFormat) {
        throw SchemaError(std::string("not a weights document (expected format '") + kWeightsFormat + "')");
    }
    const auto values = required<std::vector<double>>(doc, "weights");
    if (values.size() != static_cast<std::size_t>(nn::kParams)) {
        throw SchemaError("expected " + std::to_string(nn::kParams) + " weights, found "
                          + std::to_string(values.size()));
    }
    return Eigen::Map<const Eigen::VectorXd>(values.data(), nn::kParams);
}

std::string training_log_csv(const std::vector<nn::EpochRecord> &log)
{
    std::string out = "epoch,train_loss,test_accuracy\n";
    for (const auto &e : log) {
        out += std::to_string(e.epoch) + "," + format_double(e.train_loss) + "," + format_double(e.test_accuracy)
               + "\n";
    }
    return out;
}

std::string maxmap_csv(const nn::PsReport &report)
{
    std::string out = "class,pixel_index,max_abs,min_signed,max_signed\n";
    for (int c = 0; c < 2; ++c) {
        for (int p = 0; p < nn::kPixels; ++p) {
            out += std::to_string(c) + "," + std::to_string(p) + "," + format_double(report.max_abs_map(c, p)) + ","
                   + format_double(report.min_signed(c, p)) + "," + format_double(report.max_signed(c, p)) + "\n";
        }
    }
    return out;
}

std::string hist_csv(const nn::PsReport &report)
{
    std::string out = "pixel_index,bin_lo,bin_hi,count\n";
    for (Eigen::Index p = 0; p < report.histogram.rows(); ++p) {
        for (Eigen::Index b = 0; b < report.histogram.cols(); ++b) {
            out += std::to_string(p) + "," + format_double(report.bin_edges[b]) + ","
                   + format_double(report.bin_edges[b + 1]) + "," + std::to_string(report.histogram(p, b)) + "\n";
        }
    }
    return out;
}

std::string undefined_counts_csv(const nn::PsReport &report)
{
    std::string out = "pixel_index,undefined,samples\n";
    for (Eigen::Index p = 0; p < report.undefined_counts.size(); ++p) {
        out += std::to_string(p) + "," + std::to_string(report.undefined_counts[p]) + ","
               + std::to_string(report.per_sample_ps.rows()) + "\n";
    }
    return out;
}

std::string surface_csv(const Program &program, const BoxDomain &box, int grid)
{
    if (grid < 2) {
        throw Error("surface grid must have at least 2 points per dimension");
    }
    const auto d = static_cast<std::size_t>(box.dim());
    if (program.inputs() != box.names() || program.outputs().size() != d + 1) {
        throw Error("surface program must take the box variables and return grad_norm plus one value per variable");
    }
    std::string out;
    for (const auto &name : box.names()) {
        out += name + ",";
    }
    out += "grad_norm,";
    for (const auto &name : box.names()) {
        out += "ps_" + name + ",";
    }
    out += "defined\n";

    std::size_t total = 1;
    for (std::size_t k = 0; k < d; ++k) {
        total *= static_cast<std::size_t>(grid);
    }
    Evaluator ev(program);
    std::vector<double> x(d);
    std::vector<double> y(d + 1);
    for (std::size_t idx = 0; idx < total; ++idx) {
        std::size_t rest = idx;
        for (std::size_t k = d; k-- > 0;) {
            const auto i = static_cast<int>(rest % static_cast<std::size_t>(grid));
            rest /= static_cast<std::size_t>(grid);
            const auto ki = static_cast<Eigen::Index>(k);
            x[k] = i == grid - 1 ? box.upper()[ki]
                                 : box.lower()[ki] + (box.upper()[ki] - box.lower()[ki]) * (static_cast<double>(i) / (grid - 1));
        }
        ev.run(x, y);
        bool defined = true;
        for (double v : x) {
            out += format_double(v) + ",";
        }
        for (double v : y) {
            defined = defined && !std::isnan(v);
            out += format_double(v) + ",";
        }
        out += defined ? "1\n" : "0\n";
    }
    return out;
}

json max_result_to_json(const MaxResult &r, const BoxDomain &box)
{
    json argmax = json::object();
    for (std::size_t k = 0; k < box.names().size(); ++k) {
        argmax[box.names()[k]] = r.argmax[static_cast<Eigen::Index>(k)];
    }
    return {
        {"argmax", std::move(argmax)},
        {"value", r.value},
        {"evaluations", r.evaluations},
        {"seeds_used", r.seeds_used},
    };
}

json read_json_file(const std::filesystem::path &path)
{
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    try {
        return json::parse(in);
    } catch (const json::parse_error &e) {
        throw SchemaError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

void write_text_file(const std::filesystem::path &path, const std::string &text)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing '" + path.string() + "'");
    }
}

void write_json_file(const std::filesystem::path &path, const json &doc)
{
    write_text_file(path, doc.dump(2) + "\n");
}

} // namespace psens::io
