#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "qaoi/model.hpp"
#include "qaoi/sim.hpp"

namespace qaoi {

/// Empirical freshness statistics over a window of trajectory records.
///
/// The integer histograms are the ground truth; averages, CCDFs, and the
/// per-phase age distribution are derived from them, so pooling reports by
/// summing histograms reproduces the concatenated-trajectory numbers bit for
/// bit. Phases index by slots_to_query, row 0 being the query slots.
struct MetricsReport {
  int query_period = 0;
  int max_age = 0;
  std::int64_t slot_count = 0;
  std::int64_t query_count = 0;

  std::vector<std::int64_t> aoi_hist;                 // [age], 1..max_age used
  std::vector<std::int64_t> qaoi_hist;                // ages sampled at query slots
  std::vector<std::vector<std::int64_t>> phase_hist;  // [sigma][age]

  double avg_aoi = 0.0;
  double avg_qaoi = 0.0;
  std::vector<double> ccdf_aoi;                 // [v] = P(age > v), v = 0..max_age
  std::vector<double> ccdf_qaoi;
  std::vector<std::vector<double>> phase_pmf;   // rows sum to 1 where the phase was seen
};

namespace detail {

inline void finalize_report(MetricsReport& r) {
  std::int64_t aoi_sum = 0, qaoi_sum = 0;
  for (int age = 1; age <= r.max_age; ++age) {
    aoi_sum += static_cast<std::int64_t>(age) * r.aoi_hist[age];
    qaoi_sum += static_cast<std::int64_t>(age) * r.qaoi_hist[age];
  }
  r.avg_aoi = static_cast<double>(aoi_sum) / static_cast<double>(r.slot_count);
  r.avg_qaoi = static_cast<double>(qaoi_sum) / static_cast<double>(r.query_count);

  auto ccdf_of = [&](const std::vector<std::int64_t>& hist, std::int64_t total) {
    std::vector<double> ccdf(static_cast<std::size_t>(r.max_age) + 1, 0.0);
    std::int64_t above = 0;
    for (int v = r.max_age; v >= 0; --v) {
      ccdf[v] = static_cast<double>(above) / static_cast<double>(total);
      if (v >= 1) above += hist[v];
    }
    return ccdf;
  };
  r.ccdf_aoi = ccdf_of(r.aoi_hist, r.slot_count);
  r.ccdf_qaoi = ccdf_of(r.qaoi_hist, r.query_count);

  r.phase_pmf.assign(r.query_period, std::vector<double>(r.max_age + 1, 0.0));
  for (int sigma = 0; sigma < r.query_period; ++sigma) {
    std::int64_t row_total = 0;
    for (int age = 1; age <= r.max_age; ++age) row_total += r.phase_hist[sigma][age];
    if (row_total == 0) continue;
    for (int age = 1; age <= r.max_age; ++age)
      r.phase_pmf[sigma][age] =
          static_cast<double>(r.phase_hist[sigma][age]) / static_cast<double>(row_total);
  }
}

}  // namespace detail

/// Exact empirical statistics over the supplied records. Callers slice off
/// any warmup beforehand; every record given is counted.
inline MetricsReport compute_metrics(std::span<const TrajectoryRecord> records,
                                     const ModelParams& p) {
  p.validate();
  if (records.empty()) throw std::invalid_argument("compute_metrics: no records");

  MetricsReport r;
  r.query_period = p.query_period;
  r.max_age = p.max_age;
  r.aoi_hist.assign(static_cast<std::size_t>(p.max_age) + 1, 0);
  r.qaoi_hist.assign(static_cast<std::size_t>(p.max_age) + 1, 0);
  r.phase_hist.assign(p.query_period, std::vector<std::int64_t>(p.max_age + 1, 0));

  for (const auto& rec : records) {
    if (!state_valid(State{rec.age, rec.slots_to_query, rec.tokens}, p))
      throw std::invalid_argument("compute_metrics: record outside the model's ranges");
    ++r.aoi_hist[rec.age];
    ++r.phase_hist[rec.slots_to_query][rec.age];
    ++r.slot_count;
    if (rec.is_query_slot) {
      ++r.qaoi_hist[rec.age];
      ++r.query_count;
    }
  }
  if (r.query_count == 0)
    throw std::invalid_argument("compute_metrics: no query slots in the window");
  detail::finalize_report(r);
  return r;
}

/// Count-weighted pooling; identical to compute_metrics on the concatenated
/// records because only the integer histograms are summed.
inline MetricsReport merge_reports(std::span<const MetricsReport> reports) {
  if (reports.empty()) throw std::invalid_argument("merge_reports: nothing to merge");
  MetricsReport out = reports.front();
  for (std::size_t k = 1; k < reports.size(); ++k) {
    const auto& r = reports[k];
    if (r.query_period != out.query_period || r.max_age != out.max_age)
      throw std::invalid_argument("merge_reports: incompatible report dimensions");
    out.slot_count += r.slot_count;
    out.query_count += r.query_count;
    for (int age = 0; age <= out.max_age; ++age) {
      out.aoi_hist[age] += r.aoi_hist[age];
      out.qaoi_hist[age] += r.qaoi_hist[age];
    }
    for (int sigma = 0; sigma < out.query_period; ++sigma)
      for (int age = 0; age <= out.max_age; ++age)
        out.phase_hist[sigma][age] += r.phase_hist[sigma][age];
  }
  detail::finalize_report(out);
  return out;
}

}  // namespace qaoi
