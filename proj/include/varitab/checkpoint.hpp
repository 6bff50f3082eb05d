#pragma once

#include <string>

#include "varitab/model.hpp"

namespace varitab {

// Single-file container: "VTAB" magic, u32 version, length-prefixed text
// manifest (hyperparameters + named tensor index), length-prefixed
// vocabulary (token per line, id order), then tensors in index order, each
// as u64-LE rank and extents followed by IEEE-754 little-endian values.
// Writes are atomic via temp-file + rename.

inline constexpr char kCheckpointMagic[4] = {'V', 'T', 'A', 'B'};
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(ModelState& model, const std::string& path);

enum class LoadMode {
    exact,   // verbatim reconstruction, vocabulary frozen
    extend,  // allows subsequent vocabulary growth and head replacement
};

ModelState load_checkpoint(const std::string& path, LoadMode mode);

}  // namespace varitab
