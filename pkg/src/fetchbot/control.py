"""Base motion control: PID with anti-windup, command scaling/smoothing,
and the latched watchdog/e-stop.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import Twist2D, normalize_angle


@dataclass(frozen=True)
class DriveLimits:
    v_max: float = 0.5        # m/s
    omega_max: float = 1.0    # rad/s
    a_max: float = 0.5        # m/s^2
    alpha_max: float = 1.0    # rad/s^2


@dataclass
class Pid:
    """Scalar PID with conditional-integration anti-windup.

    When angular=True the error wraps to (-pi, pi]. The integrator only
    accumulates while the output is unsaturated or the error drives it
    back toward the linear region.
    """

    kp: float = 3.0
    ki: float = 0.2
    kd: float = 0.3
    i_max: float = 1.0
    u_max: float = 1.0
    angular: bool = False
    integral: float = field(default=0.0, init=False)
    prev_error: float | None = field(default=None, init=False)

    def reset(self) -> None:
        self.integral = 0.0
        self.prev_error = None

    def step(self, setpoint: float, measurement: float, dt: float) -> float:
        if dt <= 0:
            raise ValueError("dt must be positive")
        error = setpoint - measurement
        if self.angular:
            error = normalize_angle(error)
        derivative = 0.0 if self.prev_error is None else (error - self.prev_error) / dt

        candidate = min(self.i_max, max(-self.i_max, self.integral + error * dt))
        u_unclamped = self.kp * error + self.ki * candidate + self.kd * derivative
        saturated = abs(u_unclamped) > self.u_max
        pushing_deeper = saturated and (u_unclamped * error > 0.0)
        if not pushing_deeper:
            self.integral = candidate

        u = self.kp * error + self.ki * self.integral + self.kd * derivative
        self.prev_error = error
        return min(self.u_max, max(-self.u_max, u))


def scale_and_smooth(cmd: Twist2D, prev: Twist2D, limits: DriveLimits, dt: float) -> Twist2D:
    """Clamp a raw planner command to the velocity limits and rate-limit the
    change from the previous command.

    When both components exceed their limits they are scaled by one common
    factor so the commanded curvature v/omega is preserved.
    """
    v, w = cmd.v, cmd.omega
    over_v = abs(v) > limits.v_max
    over_w = abs(w) > limits.omega_max
    if over_v and over_w:
        scale = min(limits.v_max / abs(v), limits.omega_max / abs(w))
        v *= scale
        w *= scale
    else:
        v = min(limits.v_max, max(-limits.v_max, v))
        w = min(limits.omega_max, max(-limits.omega_max, w))

    dv = min(limits.a_max * dt, max(-limits.a_max * dt, v - prev.v))
    dw = min(limits.alpha_max * dt, max(-limits.alpha_max * dt, w - prev.omega))
    return Twist2D(prev.v + dv, prev.omega + dw)


@dataclass
class SafetyState:
    """Command-freshness watchdog plus the latched e-stop channel.

    Both the timeout and the e-stop latch; once latched, check() forces a
    zero command until reset() is called.
    """

    timeout: float = 0.5
    last_command_time: float = 0.0
    estop_latched: bool = False

    def command_received(self, now: float) -> None:
        self.last_command_time = now

    def estop(self) -> None:
        self.estop_latched = True

    def reset(self) -> None:
        self.estop_latched = False

    def check(self, now: float, cmd: Twist2D) -> Twist2D:
        """Pass the command through, or zero it (and latch) on timeout/e-stop."""
        if self.estop_latched:
            return Twist2D(0.0, 0.0)
        if now - self.last_command_time > self.timeout:
            self.estop_latched = True
            return Twist2D(0.0, 0.0)
        return cmd
