// SPDX-License-Identifier: Apache-2.0
//
// Policy persistence and bound-history export.
#pragma once

#include <string>

#include "cobid/sddp.hpp"

namespace cobid {

inline constexpr int kPolicyFormatVersion = 1;

std::string export_policy_json(const Policy& policy);
/// Throws DataError on version or checksum mismatch.
Policy import_policy_json(const std::string& text);
void export_policy(const Policy& policy, const std::string& path);
Policy import_policy(const std::string& path);

/// iteration,upper_bound,forward_value,slack_mwh
std::string bound_history_csv(const Policy& policy);

/// Whole-file helpers shared by the artifact writers.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace cobid
