#ifndef SWVM_MODEL_IO_H_
#define SWVM_MODEL_IO_H_

#include <cstdint>
#include <string>
#include <string_view>

#include "swvm/learners.h"

namespace swvm {

inline constexpr int kModelFormatVersion = 1;

// 64-bit FNV-1a.
std::uint64_t fnv1a64(std::string_view data);

// Text model file:
//
//   swvm-model 1
//   checksum <16 hex digits>      FNV-1a of every byte after this line
//   algorithm / markov_order / averaging / config / epoch lines
//   labels N        one name per line
//   features N      feature string TAB id, in id order
//   weights N       id:value of the decoding vector, non-zero only
//   raw_weights N   id:value of the final vector
//
// Values use %.17g, so save -> load -> save is byte-identical.
std::string serialize_model(const Model& model);

// ParseError on malformed content, ChecksumError when the body hash does not
// match the header.
Model parse_model(std::string_view text);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

}  // namespace swvm

#endif  // SWVM_MODEL_IO_H_
