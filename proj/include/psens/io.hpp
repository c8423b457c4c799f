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

// File formats of the command-line tool. Column order of every CSV and the
// key layout of every JSON document are frozen; see docs/formats.md.

#ifndef PSENS_IO_HPP
#define PSENS_IO_HPP

#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include <psens/exec.hpp>
#include <psens/nnlab.hpp>
#include <psens/optim.hpp>

namespace psens::io
{

inline constexpr const char *kToolVersion = "0.3.0";
inline constexpr const char *kDatasetFormat = "psens.dataset/1";
inline constexpr const char *kWeightsFormat = "psens.weights/1";

// Malformed or mismatching input documents.
class SchemaError : public Error
{
public:
    using Error::Error;
};

class IoError : public Error
{
public:
    using Error::Error;
};

// 17 significant digits; "nan" for undefined values.
std::string format_double(double v);

nlohmann::json dataset_to_json(const nn::SyntheticData &data);
nn::SyntheticData dataset_from_json(const nlohmann::json &doc);

nlohmann::json weights_to_json(const Eigen::VectorXd &weights, const nlohmann::json &training);
Eigen::VectorXd weights_from_json(const nlohmann::json &doc);

std::string training_log_csv(const std::vector<nn::EpochRecord> &log);
std::string maxmap_csv(const nn::PsReport &report);
std::string hist_csv(const nn::PsReport &report);
std::string undefined_counts_csv(const nn::PsReport &report);

// Samples `program` (outputs: grad_norm, then one partial sensitivity per box
// variable) on the grid^d lattice of `box`, first variable slowest.
// Columns: <vars...>, grad_norm, ps_<var>..., defined.
std::string surface_csv(const Program &program, const BoxDomain &box, int grid);

nlohmann::json max_result_to_json(const MaxResult &r, const BoxDomain &box);

nlohmann::json read_json_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, const std::string &text);
void write_json_file(const std::filesystem::path &path, const nlohmann::json &doc);

} // namespace psens::io

#endif
