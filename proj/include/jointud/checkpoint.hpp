#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "jointud/joint_model.hpp"

namespace jointud {

// "JUDM", u32 version, then length-prefixed strings: model config text, label
// sets, lemma script encodings, vocabularies; then every parameter as name,
// u32 rows, u32 cols and row-major float32 values. Little-endian.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(std::ostream& out, const JointModel<float>& model);
std::unique_ptr<JointModel<float>> load_checkpoint(std::istream& in);

void save_checkpoint_file(const std::string& path, const JointModel<float>& model);
std::unique_ptr<JointModel<float>> load_checkpoint_file(const std::string& path);

}  // namespace jointud
