// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>

#include "dlczsim/runner.hpp"

namespace dlczsim::report {

/// Canonical JSON dump of a config (sorted keys, fixed layout); the basis of
/// the provenance hash.
std::string config_to_json(const run::ExperimentConfig& config);

/// Parse a config from JSON text. Unknown keys are rejected and schema
/// violations carry the offending field path (and parse errors the
/// line/column) in the exception message.
run::ExperimentConfig config_from_json_string(const std::string& text);
run::ExperimentConfig config_from_json_file(const std::string& path);

/// FNV-1a over the canonical dump.
std::uint64_t config_hash(const run::ExperimentConfig& config);

void write_text_file(const std::string& path, const std::string& content);

} // namespace dlczsim::report
