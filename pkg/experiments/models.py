import uuid

from django.db import models


class ExperimentRun(models.Model):
    """One invocation of a planning command, with the manifest it wrote."""

    COMMAND_SOLVE = "solve"
    COMMAND_SIMULATE = "simulate"
    COMMAND_VERIFY = "verify"
    COMMAND_BENCH = "bench"

    COMMAND_CHOICES = [
        (COMMAND_SOLVE, "Solve"),
        (COMMAND_SIMULATE, "Simulate"),
        (COMMAND_VERIFY, "Verify"),
        (COMMAND_BENCH, "Bench"),
    ]

    STATUS_SUCCEEDED = "succeeded"
    STATUS_FAILED = "failed"

    STATUS_CHOICES = [
        (STATUS_SUCCEEDED, "Succeeded"),
        (STATUS_FAILED, "Failed"),
    ]

    id = models.UUIDField(primary_key=True, default=uuid.uuid4, editable=False)
    command = models.CharField(max_length=16, choices=COMMAND_CHOICES)
    name = models.CharField(max_length=120, blank=True)
    config_hash = models.CharField(max_length=64, blank=True, db_index=True)
    seed = models.BigIntegerField(null=True, blank=True)
    status = models.CharField(
        max_length=16, choices=STATUS_CHOICES, default=STATUS_SUCCEEDED
    )
    artifact_dir = models.CharField(max_length=500, blank=True)
    manifest = models.JSONField(default=dict, blank=True)
    summary = models.TextField(blank=True)
    started_at = models.DateTimeField(null=True, blank=True)
    finished_at = models.DateTimeField(null=True, blank=True)
    created_at = models.DateTimeField(auto_now_add=True)

    class Meta:
        ordering = ("-created_at",)

    def __str__(self) -> str:
        label = self.name or self.config_hash[:8] or "run"
        return f"{self.command} {label} ({self.status})"

    @property
    def duration_seconds(self) -> float | None:
        if self.started_at is None or self.finished_at is None:
            return None
        return (self.finished_at - self.started_at).total_seconds()
