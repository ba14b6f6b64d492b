import math

from app.core.errors import InvalidArgumentError
from network.model import Network
from schemas.data_schemas import CosineSchedule, OptimizerConfig, StepSchedule


def lr_at(schedule: CosineSchedule | StepSchedule, epoch: int, total_epochs: int, initial_lr: float) -> float:
    if not 0 <= epoch <= total_epochs:
        raise InvalidArgumentError(f"epoch {epoch} outside [0, {total_epochs}]")
    if isinstance(schedule, StepSchedule):
        passed = sum(1 for m in schedule.milestones if epoch >= m)
        return initial_lr * schedule.gamma**passed
    total = schedule.total_epochs if schedule.total_epochs is not None else total_epochs
    if total <= 0:
        return initial_lr
    return initial_lr * 0.5 * (1.0 + math.cos(math.pi * min(epoch, total) / total))


def sgd_step(net: Network, opt: OptimizerConfig, lr_now: float) -> None:
    """v <- momentum * v + grad + wd * param; param <- param - lr * v; then zero the gradients."""
    for p in net.parameters():
        update = p.grad + opt.weight_decay * p.value if p.decay else p.grad
        p.velocity *= opt.momentum
        p.velocity += update
        p.value -= lr_now * p.velocity
        p.zero_grad()
    net.version += 1
