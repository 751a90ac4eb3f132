#ifndef SPAD_NN_CHECKPOINT_H_
#define SPAD_NN_CHECKPOINT_H_

#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "spad/nn/params.h"
#include "spad/nn/tensor.h"

namespace spad::nn {

inline constexpr char kCheckpointMagic[] = "SPAD1";
inline constexpr uint32_t kCheckpointVersion = 1;

// On-disk layout, all integers little-endian u32:
//   "SPAD1" | version | json length | json | tensor count |
//   per tensor: name length | name | rank | dims... | float32 payload
// The JSON block holds {"kind", "flavor", "meta"}.
struct Checkpoint {
  std::string kind;
  std::string flavor;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor &Find(const std::string &name) const;
};

std::string SerializeCheckpoint(const Checkpoint &ck);
// Throws FormatError on bad magic, unknown version or truncation.
Checkpoint ParseCheckpoint(std::string_view bytes);

void SaveCheckpoint(const std::string &path, const Checkpoint &ck);
Checkpoint LoadCheckpoint(const std::string &path);

// Copies every parameter value, in store order.
void AppendParams(const ParamStore &store, Checkpoint &ck);
// Rebuilds a store from the tensors whose names appear in the checkpoint.
ParamStore ParamsFromCheckpoint(const Checkpoint &ck);

// Throws ConfigError unless ck.kind == kind.
void ExpectKind(const Checkpoint &ck, std::string_view kind);

}  // namespace spad::nn

#endif  // SPAD_NN_CHECKPOINT_H_
