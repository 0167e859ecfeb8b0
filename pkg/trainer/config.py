"""
Training hyperparameters.
"""

from pydantic import BaseModel, ConfigDict, Field, model_validator


class TrainConfig(BaseModel):
    """
    SGD training schedule and clip sampling settings.

    Defaults reproduce the reference protocol: 16-frame clips, batches of ten
    sequences, learning rate 0.01 reduced tenfold from epoch 120, 400 epochs.
    """

    model_config = ConfigDict(validate_assignment=True, extra='forbid')

    clip_length: int = Field(default=16, ge=1, description="Frames per sampled clip")
    batch_size: int = Field(default=10, ge=1, description="Sequences per SGD step")
    lr_initial: float = Field(default=0.01, gt=0.0, description="Learning rate before decay")
    lr_decay_factor: float = Field(default=0.1, gt=0.0, description="Multiplier applied at the decay epoch")
    lr_decay_epoch: int = Field(default=120, ge=1, description="First epoch using the decayed rate")
    total_epochs: int = Field(default=400, ge=1, description="Number of training epochs")
    seed: int = Field(default=0, ge=0, lt=2 ** 64, description="Seed for clip sampling and shuffling")
    momentum: float = Field(default=0.0, ge=0.0, lt=1.0, description="SGD momentum, 0 disables")
    weight_decay: float = Field(default=0.0, ge=0.0, description="L2 penalty added to every gradient")

    @model_validator(mode='after')
    def validate_schedule(self) -> 'TrainConfig':
        if self.lr_decay_epoch >= self.total_epochs:
            raise ValueError(f'lr_decay_epoch ({self.lr_decay_epoch}) must be smaller than '
                             f'total_epochs ({self.total_epochs})')
        return self
