import uuid

from django.db import models


class RunManifest(models.Model):
    """
    Append-only record of a CLI run: one STARTED row before any output is
    written and one FINALIZED row afterwards, both sharing ``run_id``.
    """
    class Phase(models.TextChoices):
        STARTED = 'STARTED', 'Started'
        FINALIZED = 'FINALIZED', 'Finalized'
        FAILED = 'FAILED', 'Failed'

    run_id = models.UUIDField(
        default=uuid.uuid4,
        db_index=True,
        help_text="Identifier shared by the rows of one run."
    )
    phase = models.CharField(
        max_length=10,
        choices=Phase.choices,
        help_text="Lifecycle point this row records."
    )
    command = models.CharField(
        max_length=20,
        db_index=True,
        help_text="Management command that produced the run (analyze, simulate, ...)."
    )
    scenario_path = models.CharField(
        max_length=500,
        blank=True,
        help_text="Scenario file the run was read from."
    )
    params = models.JSONField(
        default=dict,
        help_text="Resolved, validated parameters and integrator settings."
    )
    seed = models.BigIntegerField(
        null=True,
        blank=True,
        help_text="Noise seed after command-line overrides."
    )
    tool_version = models.CharField(max_length=40)
    outputs = models.JSONField(
        default=list,
        blank=True,
        help_text="Paths of the files the run wrote."
    )
    wall_clock = models.FloatField(
        null=True,
        blank=True,
        help_text="Seconds between the STARTED and FINALIZED rows."
    )
    step_count = models.BigIntegerField(
        null=True,
        blank=True,
        help_text="Integration steps taken, summed over trajectories."
    )
    extra = models.JSONField(
        default=dict,
        blank=True,
        help_text="Command-specific results, e.g. the detected dynamics class."
    )
    timestamp = models.DateTimeField(
        auto_now_add=True,
        db_index=True,
    )

    def save(self, *args, **kwargs):
        # Rows are never updated
        if self.pk is not None:
            return
        super().save(*args, **kwargs)

    def delete(self, *args, **kwargs):
        return

    def __str__(self):
        return f"{self.command} {self.run_id} {self.phase}"

    class Meta:
        verbose_name = "Run Manifest"
        verbose_name_plural = "Run Manifests"
        ordering = ['-timestamp']
        indexes = [
            models.Index(fields=['run_id', 'phase'], name='cascade_run_phase_idx'),
        ]
