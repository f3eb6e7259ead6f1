#include "kbu/ensemble.hpp"

#include <atomic>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace kbu {

namespace {

int resolve_jobs(int jobs, int work_items) {
  if (jobs < 0) throw ConfigError("jobs must be non-negative");
  int n = jobs == 0 ? static_cast<int>(std::thread::hardware_concurrency()) : jobs;
  if (n < 1) n = 1;
  return std::min(n, work_items);
}

[[noreturn]] void rethrow_with_member(std::exception_ptr err, int member) {
  std::ostringstream os;
  os << "ensemble member " << member << ": ";
  try {
    std::rethrow_exception(err);
  } catch (const ConfigError& e) {
    throw ConfigError(os.str() + e.what());
  } catch (const std::exception& e) {
    throw NumericalError(os.str() + e.what());
  }
}

// Runs fn(k) for k = 0..count-1 on a worker pool. The first failure aborts
// the run with the member index attached.
template <typename Fn>
void parallel_for_members(int count, int jobs, Fn&& fn) {
  const int workers = resolve_jobs(jobs, count);
  if (workers <= 1) {
    for (int k = 0; k < count; ++k) {
      try {
        fn(k);
      } catch (...) {
        rethrow_with_member(std::current_exception(), k);
      }
    }
    return;
  }

  std::atomic<int> next{0};
  std::atomic<int> failed_member{-1};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto worker = [&] {
    for (;;) {
      const int k = next.fetch_add(1);
      if (k >= count || failed_member.load() >= 0) return;
      try {
        fn(k);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (failed_member.load() < 0) {
          failed_member.store(k);
          first_error = std::current_exception();
        }
        return;
      }
    }
  };

  std::vector<std::thread> pool;
  pool.reserve(static_cast<size_t>(workers));
  for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
  for (auto& t : pool) t.join();

  if (failed_member.load() >= 0) rethrow_with_member(first_error, failed_member.load());
}

}  // namespace

ParameterSpace build_parameter_space(std::vector<Matrix> a_list,
                                     std::vector<SpdMatrix> gamma_list,
                                     std::vector<SpdMatrix> r_list,
                                     std::vector<SpdMatrix> q_list) {
  if (a_list.empty() || gamma_list.empty() || r_list.empty() || q_list.empty())
    throw ConfigError("build_parameter_space: every factor list must be nonempty");

  ParameterSpace space;
  space.factor_sizes = {static_cast<int>(a_list.size()), static_cast<int>(gamma_list.size()),
                        static_cast<int>(r_list.size()), static_cast<int>(q_list.size())};
  const long n = static_cast<long>(a_list.size()) * gamma_list.size() * r_list.size() *
                 q_list.size();
  space.members.reserve(static_cast<size_t>(n));
  space.labels.reserve(static_cast<size_t>(n));

  for (size_t ia = 0; ia < a_list.size(); ++ia)
    for (size_t ig = 0; ig < gamma_list.size(); ++ig)
      for (size_t ir = 0; ir < r_list.size(); ++ir)
        for (size_t iq = 0; iq < q_list.size(); ++iq) {
          space.members.push_back(
              SystemTuple{a_list[ia], gamma_list[ig], r_list[ir], q_list[iq]});
          Vector label(4);
          label << static_cast<double>(ia), static_cast<double>(ig),
              static_cast<double>(ir), static_cast<double>(iq);
          space.labels.push_back(std::move(label));
        }
  return space;
}

std::array<int, 4> factor_indices(const ParameterSpace& space, int k) {
  if (k < 0 || k >= space.size()) throw ConfigError("factor_indices: member index out of range");
  const auto& s = space.factor_sizes;
  std::array<int, 4> idx{};
  idx[3] = k % s[3];
  k /= s[3];
  idx[2] = k % s[2];
  k /= s[2];
  idx[1] = k % s[1];
  k /= s[1];
  idx[0] = k;
  return idx;
}

int member_index(const ParameterSpace& space, const std::array<int, 4>& idx) {
  const auto& s = space.factor_sizes;
  for (int i = 0; i < 4; ++i) {
    if (idx[static_cast<size_t>(i)] < 0 || idx[static_cast<size_t>(i)] >= s[static_cast<size_t>(i)])
      throw ConfigError("member_index: factor index out of range");
  }
  return ((idx[0] * s[1] + idx[1]) * s[2] + idx[2]) * s[3] + idx[3];
}

std::vector<RiccatiSolution> riccati_family(const ParameterSpace& space,
                                            const SharedModel& shared, const TimeGrid& grid,
                                            const IntegratorConfig& config, int jobs) {
  std::vector<std::optional<RiccatiSolution>> slots(static_cast<size_t>(space.size()));
  parallel_for_members(space.size(), jobs, [&](int k) {
    slots[static_cast<size_t>(k)] =
        make_solution(space.members[static_cast<size_t>(k)], shared, grid, config);
  });

  std::vector<RiccatiSolution> out;
  out.reserve(slots.size());
  for (auto& s : slots) out.push_back(std::move(*s));
  return out;
}

EnsembleResult run_ensemble(const ParameterSpace& space, const SharedModel& shared,
                            const Trajectory& measurement, const TimeGrid& grid,
                            const IntegratorConfig& config,
                            const std::vector<RiccatiSolution>& riccatis, int jobs) {
  if (riccatis.size() != static_cast<size_t>(space.size()))
    throw ConfigError("run_ensemble: Riccati family size must equal the member count");

  std::vector<std::optional<KalmanRun>> slots(static_cast<size_t>(space.size()));
  parallel_for_members(space.size(), jobs, [&](int k) {
    slots[static_cast<size_t>(k)] =
        run_filter(space.members[static_cast<size_t>(k)], shared, measurement,
                   riccatis[static_cast<size_t>(k)], grid, config);
  });

  EnsembleResult result{{}, grid};
  result.runs.reserve(slots.size());
  for (auto& s : slots) result.runs.push_back(std::move(*s));
  return result;
}

EnsembleResult run_ensemble(const ParameterSpace& space, const SharedModel& shared,
                            const Trajectory& measurement, const TimeGrid& grid,
                            const IntegratorConfig& config, int jobs) {
  return run_ensemble(space, shared, measurement, grid, config,
                      riccati_family(space, shared, grid, config, jobs), jobs);
}

}  // namespace kbu
