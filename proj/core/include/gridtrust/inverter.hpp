#pragma once

// Register-level model of a 4 kW PV inverter. The setpoint register holds a
// signed 32-bit value; a negative command (a consumption dispatch) leaves
// the inverter idle.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>

namespace gridtrust::device {

using Tick = std::uint64_t;

struct RegisterMap {
  static constexpr std::uint32_t rated_w = 4000;

  std::int32_t setpoint_w = 0;
  std::uint32_t output_w = 0;
  std::uint16_t status = 0;
};

// Status register bits.
inline constexpr std::uint16_t kStatusRunning = 0x0001;
inline constexpr std::uint16_t kStatusSettling = 0x0002;
inline constexpr std::uint16_t kStatusIrradianceLimited = 0x0004;
inline constexpr std::uint16_t kStatusRatingLimited = 0x0008;

// Available PV power over time. Step-hold between samples; before the first
// sample the array is assumed to deliver full rated power.
class IrradianceTrace {
 public:
  IrradianceTrace() = default;

  void set(Tick tick, std::uint32_t watts) { samples_[tick] = watts; }
  std::uint32_t at(Tick tick) const;
  bool empty() const { return samples_.empty(); }

  // Lines of "tick watts"; '#' starts a comment. Throws Malformed.
  static IrradianceTrace parse(std::istream& in);
  // Throws FileUnreadable.
  static IrradianceTrace load(const std::filesystem::path& path);

 private:
  std::map<Tick, std::uint32_t> samples_;
};

struct InverterParams {
  std::uint32_t rated_w = RegisterMap::rated_w;
  std::uint32_t rounding_step_w = 10;
  Tick response_delay_ticks = 2;
};

// Nearest multiple of `step`, halves rounding up; negatives clamp to 0.
std::uint32_t round_to_step(std::int64_t watts, std::uint32_t step);

// min(round(setpoint), irradiance, rated), never below zero.
std::uint32_t settled_output(std::int64_t setpoint_w, std::uint32_t irradiance_w,
                             const InverterParams& params);

class InverterModel {
 public:
  explicit InverterModel(InverterParams params = {}, IrradianceTrace trace = {});

  void write_setpoint(std::int32_t watts);
  void step(Tick ticks = 1);

  const RegisterMap& registers() const { return regs_; }
  Tick now() const { return now_; }
  const InverterParams& params() const { return params_; }
  const IrradianceTrace& trace() const { return trace_; }
  std::uint32_t irradiance_now() const;

 private:
  void refresh_status();

  InverterParams params_;
  IrradianceTrace trace_;
  RegisterMap regs_;
  Tick now_ = 0;
  Tick setpoint_tick_ = 0;
};

}  // namespace gridtrust::device
