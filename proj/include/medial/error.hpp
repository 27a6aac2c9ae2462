#pragma once

#include <stdexcept>
#include <string>

namespace medial {

enum class Errc {
  GradientUndefined,
  BoundsDegenerate,
  SpokeMarchFailed,
  ExcludedRegion,
  EmptyBatch,
  DivergedLoss,
  Dim2NotRenderable,
  RejectionStarved,
  NotEnoughCandidates,
  EmptyProxy,
  InvalidScene,
  InvalidCheckpoint,
  InvalidArgument,
  Io,
};

inline const char* errc_name(Errc code) {
  switch (code) {
    case Errc::GradientUndefined: return "GradientUndefined";
    case Errc::BoundsDegenerate: return "BoundsDegenerate";
    case Errc::SpokeMarchFailed: return "SpokeMarchFailed";
    case Errc::ExcludedRegion: return "ExcludedRegion";
    case Errc::EmptyBatch: return "EmptyBatch";
    case Errc::DivergedLoss: return "DivergedLoss";
    case Errc::Dim2NotRenderable: return "Dim2NotRenderable";
    case Errc::RejectionStarved: return "RejectionStarved";
    case Errc::NotEnoughCandidates: return "NotEnoughCandidates";
    case Errc::EmptyProxy: return "EmptyProxy";
    case Errc::InvalidScene: return "InvalidScene";
    case Errc::InvalidCheckpoint: return "InvalidCheckpoint";
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::Io: return "Io";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

  Errc code() const noexcept { return code_; }

 private:
  Errc code_;
};

}  // namespace medial
