// Copyright 2026 The e2eqr Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <filesystem>
#include <string>

#include "e2eqr/curriculum/curriculum.hpp"
#include "e2eqr/io/dataset.hpp"
#include "e2eqr/model/config.hpp"

namespace e2eqr::io {

/// Model and curriculum settings of one run.
///
/// The configuration file is a flat JSON object. Its keys are the
/// ModelConfig and CurriculumConfig field names plus "curriculum", which
/// names a preset (adaptive, step_by_step, cumulative, standard). The preset
/// is applied first; explicit keys override it. Unknown keys are errors.
struct RunConfig {
  model::ModelConfig model;
  curriculum::CurriculumConfig curriculum;
  curriculum::Variant variant = curriculum::Variant::kAdaptive;
};

/// DataError on unknown keys, wrong value types or invalid values.
RunConfig parse_config(const Json& j);
RunConfig load_config(const std::filesystem::path& path);
/// Every key, with the preset name; parse_config(to_json(c)) == c.
Json to_json(const RunConfig& c);

}  // namespace e2eqr::io
