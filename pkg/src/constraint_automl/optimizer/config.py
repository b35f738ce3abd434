from __future__ import annotations

from dataclasses import dataclass

from ..search_space import ActivationMask, SearchSpaceTree, is_normalized


@dataclass(frozen=True)
class AutoMLConfiguration:
    """The optimizer's own parameters: search-space mask plus search strategy flags."""

    mask: ActivationMask
    holdout_fraction: float = 0.33
    use_ensemble: bool = True
    use_incremental: bool = True
    reshuffle_validation: bool = False

    def __post_init__(self):
        if not 0.0 < self.holdout_fraction < 1.0:
            raise ValueError("holdout_fraction must lie in (0, 1)")
        object.__setattr__(self, "holdout_fraction", float(self.holdout_fraction))
        for name in ("use_ensemble", "use_incremental", "reshuffle_validation"):
            object.__setattr__(self, name, bool(getattr(self, name)))

    def scalars(self) -> list[float]:
        return [self.holdout_fraction, float(self.use_ensemble), float(self.use_incremental),
                float(self.reshuffle_validation)]

    def check(self, tree: SearchSpaceTree) -> None:
        if not is_normalized(tree, self.mask):
            raise ValueError("configuration mask is not normalized")

    def to_dict(self, tree: SearchSpaceTree | None = None) -> dict:
        d = {
            "mask": [int(b) for b in self.mask.bits],
            "holdout_fraction": self.holdout_fraction,
            "use_ensemble": self.use_ensemble,
            "use_incremental": self.use_incremental,
            "reshuffle_validation": self.reshuffle_validation,
        }
        if tree is not None:
            d["active"] = self.mask.active_names(tree)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "AutoMLConfiguration":
        return cls(ActivationMask(tuple(bool(b) for b in d["mask"])), d["holdout_fraction"],
                   d["use_ensemble"], d["use_incremental"], d["reshuffle_validation"])
