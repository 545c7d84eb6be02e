#include "gridtrust/inverter.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>

#include "gridtrust/error.hpp"

namespace gridtrust::device {

std::uint32_t IrradianceTrace::at(Tick tick) const {
  auto it = samples_.upper_bound(tick);
  if (it == samples_.begin()) return RegisterMap::rated_w;
  return std::prev(it)->second;
}

IrradianceTrace IrradianceTrace::parse(std::istream& in) {
  IrradianceTrace t;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream words(line);
    long long tick = 0;
    long long watts = 0;
    if (!(words >> tick)) continue;
    std::string extra;
    if (!(words >> watts) || (words >> extra) || tick < 0 || watts < 0) {
      throw Error(Errc::Malformed, "irradiance line " + std::to_string(line_no));
    }
    t.set(static_cast<Tick>(tick), static_cast<std::uint32_t>(watts));
  }
  return t;
}

IrradianceTrace IrradianceTrace::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::FileUnreadable, path.string());
  return parse(in);
}

std::uint32_t round_to_step(std::int64_t watts, std::uint32_t step) {
  if (watts <= 0) return 0;
  if (step <= 1) return static_cast<std::uint32_t>(watts);
  auto s = static_cast<std::int64_t>(step);
  return static_cast<std::uint32_t>((watts + s / 2) / s * s);
}

std::uint32_t settled_output(std::int64_t setpoint_w, std::uint32_t irradiance_w,
                             const InverterParams& params) {
  return std::min({round_to_step(setpoint_w, params.rounding_step_w), irradiance_w,
                   params.rated_w});
}

InverterModel::InverterModel(InverterParams params, IrradianceTrace trace)
    : params_(params), trace_(std::move(trace)) {
  refresh_status();
}

std::uint32_t InverterModel::irradiance_now() const { return trace_.at(now_); }

void InverterModel::write_setpoint(std::int32_t watts) {
  regs_.setpoint_w = watts;
  setpoint_tick_ = now_;
  if (params_.response_delay_ticks == 0) {
    regs_.output_w = settled_output(regs_.setpoint_w, irradiance_now(), params_);
  }
  refresh_status();
}

void InverterModel::step(Tick ticks) {
  for (Tick i = 0; i < ticks; ++i) {
    ++now_;
    if (now_ - setpoint_tick_ >= params_.response_delay_ticks) {
      regs_.output_w = settled_output(regs_.setpoint_w, irradiance_now(), params_);
    } else {
      // Still ramping toward the new command, but never above what the
      // array can deliver.
      regs_.output_w = std::min(regs_.output_w, irradiance_now());
    }
  }
  refresh_status();
}

void InverterModel::refresh_status() {
  std::uint16_t s = 0;
  if (regs_.output_w > 0) s |= kStatusRunning;
  if (now_ - setpoint_tick_ < params_.response_delay_ticks) s |= kStatusSettling;
  auto rounded = round_to_step(regs_.setpoint_w, params_.rounding_step_w);
  if (rounded > irradiance_now()) s |= kStatusIrradianceLimited;
  if (rounded > params_.rated_w) s |= kStatusRatingLimited;
  regs_.status = s;
}

}  // namespace gridtrust::device
