#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "ambc/schedule.hpp"
#include "ambc/score_model.hpp"
#include "ambc/trainer.hpp"

namespace ambc {

// Checkpoint container, all integers little-endian:
//
//   8 bytes   magic "AMBCCKPT"
//   u32       format version (1)
//   u64       header length L
//   L bytes   UTF-8 JSON header (dims, schedule, hyperparameters, counts)
//   f64 * N   score parameters followed by discriminator parameters
//
// The JSON is written with sorted keys so save -> load -> save is byte-stable.

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
    ScoreModel score;
    DiscModel disc;
    NoiseSchedule schedule;
    TrainConfig train;
};

class CheckpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void save_checkpoint(std::ostream& os, const Checkpoint& ckpt);
void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(std::istream& is);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ambc
