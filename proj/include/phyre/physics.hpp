#pragma once

#include <optional>
#include <vector>

#include "phyre/world.hpp"

namespace phyre {

/// Fixed constants of the benchmark. Task files record them so results are reproducible.
struct PhysicsParams
{
  double dt = 1.0 / 60.0;
  int iterations = 10;
  double gravity = 300.0;
  double restitution = 0.2;
  double friction = 0.5;
  /// Distance under which two bodies count as touching.
  double touch_tolerance = 0.5;
  /// Cap on the speed of any point of a body.
  double speed_cap = 500.0;
  /// Approach speeds below this do not bounce.
  double restitution_threshold = 10.0;
  /// Penetration tolerated before bodies are pushed apart.
  double linear_slop = 0.1;
  /// Fraction of the excess penetration removed per step.
  double baumgarte = 0.2;
  bool walls = true;
  /// The world freezes once no point of any dynamic body has moved faster than
  /// `sleep_speed` for `sleep_time` seconds. A non-positive sleep_time disables this.
  double sleep_speed = 0.05;
  double sleep_time = 0.5;

  bool operator==(const PhysicsParams&) const = default;
};

/// Ids used for the four implicit walls that bound the world.
inline constexpr int kFloorId = -1;
inline constexpr int kLeftWallId = -2;
inline constexpr int kRightWallId = -3;
inline constexpr int kCeilingId = -4;

struct Contact
{
  int body_a = 0;
  int body_b = 0;
  Vec2 point;
  Vec2 normal; ///< unit vector pointing from a to b
  double penetration = 0.0;
};

struct SimulationResult
{
  bool solved = false;
  double end_time = 0.0;
  std::vector<WorldState> frames;
  std::optional<double> first_satisfied_at;
};

/// All contacts within `params.touch_tolerance`, sorted by (body_a, body_b).
/// Static-static pairs are skipped; wall contacts use the negative wall ids as body_b.
std::vector<Contact> contacts(const WorldState& world, const PhysicsParams& params = {});

/// Advances the world by one fixed step. Throws Error{NumericalDivergence} if the state
/// stops being finite.
WorldState step(const WorldState& world, double dt, const PhysicsParams& params = {});

/// Steps until the goal holds for its dwell time or `time_limit` elapses. Frames are
/// captured every `frame_stride` steps (none when stride <= 0) plus the final state.
SimulationResult simulate(const WorldState& world, const Goal& goal, double time_limit,
                          int frame_stride, const PhysicsParams& params = {});

/// True iff subject and object are within the touch tolerance.
bool goal_contact(const WorldState& world, const Goal& goal, const PhysicsParams& params = {});

/// Kinetic plus gravitational potential energy of the dynamic bodies (floor at y = 0).
double total_energy(const WorldState& world, const PhysicsParams& params = {});

/// Reusable stepping state; `simulate` keeps one of these for a whole rollout.
class Stepper
{
public:
  explicit Stepper(PhysicsParams params = {});

  void step(WorldState& world);
  const PhysicsParams& params() const { return params_; }
  bool asleep() const { return asleep_; }

  struct SolverBody
  {
    Vec2 position;
    double angle = 0.0;
    Vec2 velocity;
    double omega = 0.0;
    Vec2 drift; ///< exact-gravity displacement rate added during position integration
    double mass = 0.0;
    double inertia = 0.0;
    double inv_mass = 0.0;
    double inv_inertia = 0.0;
    double radius = 0.0;
    Vec2 start_velocity;
    double start_omega = 0.0;
  };

  struct ManifoldPoint
  {
    Vec2 point;
    double separation = 0.0;
    Vec2 ra;
    Vec2 rb;
    double normal_mass = 0.0;
    double tangent_mass = 0.0;
    double target = 0.0;
    double normal_impulse = 0.0;
    double tangent_impulse = 0.0;
  };

  struct Manifold
  {
    int a = 0; ///< solver body index
    int b = 0; ///< solver body index, or a wall id (negative)
    Vec2 normal;
    int count = 0;
    ManifoldPoint points[2];
    bool block = false;
    double k11 = 0.0, k12 = 0.0, k22 = 0.0;
    double m11 = 0.0, m12 = 0.0, m22 = 0.0;
  };

  /// Builds manifolds for the current world with the given speculative margin model.
  /// With `margin_override` >= 0 every pair uses that fixed margin.
  void collide(const WorldState& world, double margin_override = -1.0);
  const std::vector<Manifold>& manifolds() const { return manifolds_; }

private:
  void load(const WorldState& world);
  void prepare();
  void solve();
  void guard_energy();
  bool needs_correction() const;
  void correct_positions(WorldState& world, double budget);
  double energy() const;
  void store(WorldState& world) const;
  void update_sleep(WorldState& world);

  static constexpr int kCorrectionIterations = 4;
  static constexpr double kMaxCorrection = 0.5;

  PhysicsParams params_;
  std::vector<SolverBody> bodies_;
  std::vector<Manifold> manifolds_;
  long quiet_steps_ = 0;
  bool asleep_ = false;
};

} // namespace phyre
