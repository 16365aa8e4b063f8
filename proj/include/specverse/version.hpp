#pragma once

namespace specverse {

inline constexpr const char* kVersion = "0.1.0";

// Bumped when any on-disk format (corpus binary, scores CSV, export layout)
// changes incompatibly.
inline constexpr int kSchemaVersion = 1;

// Bumped when the synthetic generator's mechanism changes, so corpora remain
// traceable to the process that produced them.
inline constexpr int kGeneratorVersion = 1;

}  // namespace specverse
