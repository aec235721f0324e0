from django.db import models


class ExperimentRun(models.Model):
    mode = models.CharField(max_length=30)
    seed = models.CharField(max_length=20)  # u64 does not fit a signed BigIntegerField
    config_hash = models.CharField(max_length=64)
    exit_code = models.SmallIntegerField()
    output_dir = models.CharField(max_length=500, blank=True)
    summary = models.JSONField(null=True, blank=True)  # headline numbers of the report
    timestamp = models.DateTimeField(auto_now_add=True)

    def __str__(self):
        return f"{self.mode} seed={self.seed} exit={self.exit_code} - {self.timestamp}"
