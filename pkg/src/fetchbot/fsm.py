"""Task state machine for the fetch-and-handover scenario.

The transition function is total: listed pairs follow the table, the
emergency stop overrides from every state, and any unlisted (state, event)
pair leaves the state unchanged and emits a warning action.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from .grammar import Intent, IntentAction


class RobotState(enum.Enum):
    IDLE = "Idle"
    IDENTIFYING = "Identifying"
    LISTENING = "Listening"
    NAVIGATING_TO_WAREHOUSE = "NavigatingToWarehouse"
    LOCATING_OBJECT = "LocatingObject"
    GRASPING = "Grasping"
    NAVIGATING_TO_USER = "NavigatingToUser"
    HANDOVER = "Handover"
    RECOVERY = "Recovery"
    ESTOPPED = "EStopped"


class EventKind(enum.Enum):
    PERSON_DETECTED = "PersonDetected"
    FACE_RECOGNIZED = "FaceRecognized"
    FACE_UNKNOWN = "FaceUnknown"
    COMMAND_PARSED = "CommandParsed"
    NO_PARSE = "NoParse"
    GOAL_REACHED = "GoalReached"
    PLAN_FAILED = "PlanFailed"
    OBJECT_LOCATED = "ObjectLocated"
    OBJECT_LOST = "ObjectLost"
    GRASP_SUCCEEDED = "GraspSucceeded"
    GRASP_FAILED = "GraspFailed"
    FORCE_DETECTED = "ForceDetected"
    TIMEOUT = "Timeout"
    ESTOP = "EStop"
    RESET = "Reset"


@dataclass(frozen=True)
class Event:
    kind: EventKind
    identity: str | None = None
    intent: Intent | None = None
    payload: dict = field(default_factory=dict)

    def label(self) -> str:
        if self.kind is EventKind.FACE_RECOGNIZED and self.identity:
            return f"{self.kind.value}({self.identity})"
        if self.kind is EventKind.COMMAND_PARSED and self.intent:
            obj = f":{self.intent.object}" if self.intent.object else ""
            return f"{self.kind.value}({self.intent.action.value}{obj})"
        return self.kind.value


@dataclass(frozen=True)
class Action:
    kind: str  # say | announce | warning | release
    text: str = ""


MAX_LISTEN_RETRIES = 3

# state timeouts, seconds; Idle and EStopped never time out
STATE_TIMEOUTS = {
    RobotState.IDENTIFYING: 10.0,
    RobotState.LISTENING: 10.0,
    RobotState.NAVIGATING_TO_WAREHOUSE: 30.0,
    RobotState.LOCATING_OBJECT: 10.0,
    RobotState.GRASPING: 10.0,
    RobotState.NAVIGATING_TO_USER: 30.0,
    RobotState.HANDOVER: 10.0,
    RobotState.RECOVERY: 1.0,
}


def transition(state: RobotState, event: Event, listen_retries: int = 0):
    """Pure transition function.

    Returns (next_state, actions, listen_retries). Unlisted pairs return
    the state unchanged with a warning action, which makes the function
    total over states x events.
    """
    kind = event.kind

    if kind is EventKind.ESTOP:
        return RobotState.ESTOPPED, (Action("announce", "emergency stop engaged"),), listen_retries

    if state is RobotState.ESTOPPED:
        if kind is EventKind.RESET:
            return RobotState.IDLE, (Action("announce", "emergency stop cleared"),), 0
        return state, (Action("warning", f"ignored {event.label()} while e-stopped"),), listen_retries

    if state is RobotState.IDLE:
        if kind is EventKind.PERSON_DETECTED:
            return RobotState.IDENTIFYING, (), listen_retries

    elif state is RobotState.IDENTIFYING:
        if kind is EventKind.FACE_RECOGNIZED:
            return RobotState.LISTENING, (Action("say", f"hello {event.identity}, how can I help?"),), 0
        if kind is EventKind.FACE_UNKNOWN:
            return RobotState.IDLE, (Action("say", "I do not recognize you"),), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.IDLE, (), listen_retries

    elif state is RobotState.LISTENING:
        if kind is EventKind.COMMAND_PARSED:
            intent = event.intent
            if intent is not None and intent.action is IntentAction.FETCH:
                return (
                    RobotState.NAVIGATING_TO_WAREHOUSE,
                    (Action("say", f"fetching the {intent.object}"),),
                    0,
                )
            if intent is not None and intent.action is IntentAction.STOP:
                return RobotState.IDLE, (Action("say", "stopping"),), 0
            if intent is not None and intent.action is IntentAction.HELLO:
                return state, (Action("say", "hello"),), 0
            # malformed intent: fall through to the unlisted-pair rule
        if kind is EventKind.NO_PARSE:
            retries = listen_retries + 1
            if retries >= MAX_LISTEN_RETRIES:
                return RobotState.IDLE, (Action("say", "sorry, giving up"),), 0
            return state, (Action("say", "please repeat the command"),), retries
        if kind is EventKind.TIMEOUT:
            return RobotState.IDLE, (), 0

    elif state is RobotState.NAVIGATING_TO_WAREHOUSE:
        if kind is EventKind.GOAL_REACHED:
            return RobotState.LOCATING_OBJECT, (), listen_retries
        if kind is EventKind.PLAN_FAILED:
            return RobotState.RECOVERY, (Action("announce", "no route to the warehouse"),), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.RECOVERY, (Action("announce", "navigation timed out"),), listen_retries

    elif state is RobotState.LOCATING_OBJECT:
        if kind is EventKind.OBJECT_LOCATED:
            return RobotState.GRASPING, (), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.RECOVERY, (Action("announce", "cannot find the object"),), listen_retries

    elif state is RobotState.GRASPING:
        if kind is EventKind.GRASP_SUCCEEDED:
            return RobotState.NAVIGATING_TO_USER, (Action("say", "got it"),), listen_retries
        if kind is EventKind.OBJECT_LOST:
            return RobotState.LOCATING_OBJECT, (), listen_retries
        if kind is EventKind.GRASP_FAILED:
            return RobotState.RECOVERY, (Action("announce", "grasp failed"),), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.RECOVERY, (Action("announce", "grasp timed out"),), listen_retries

    elif state is RobotState.NAVIGATING_TO_USER:
        if kind is EventKind.GOAL_REACHED:
            return RobotState.HANDOVER, (Action("say", "here you are, pull to take it"),), listen_retries
        if kind is EventKind.PLAN_FAILED:
            return RobotState.RECOVERY, (Action("announce", "no route back to you"),), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.RECOVERY, (Action("announce", "navigation timed out"),), listen_retries

    elif state is RobotState.HANDOVER:
        if kind is EventKind.FORCE_DETECTED:
            return RobotState.IDLE, (Action("release", ""), Action("say", "you are welcome")), listen_retries
        if kind is EventKind.TIMEOUT:
            return RobotState.RECOVERY, (Action("announce", "nobody took the object"),), listen_retries

    elif state is RobotState.RECOVERY:
        if kind is EventKind.TIMEOUT:
            return RobotState.IDLE, (), listen_retries

    return state, (Action("warning", f"unhandled {event.label()} in {state.value}"),), listen_retries


class TaskMachine:
    """Stateful wrapper holding the current state and the listen-retry count."""

    def __init__(self, state: RobotState = RobotState.IDLE):
        self.state = state
        self.listen_retries = 0

    def handle(self, event: Event):
        new_state, actions, retries = transition(self.state, event, self.listen_retries)
        changed = new_state is not self.state
        self.state = new_state
        self.listen_retries = retries
        return new_state, actions, changed
