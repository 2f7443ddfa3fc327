import csv

from django.contrib import admin, messages
from django.http import HttpResponse
from unfold.admin import ModelAdmin

from experiments.models import ExperimentRun

EXPORT_COLUMNS = [
    "Run ID",
    "Command",
    "Name",
    "Config hash",
    "Seed",
    "Status",
    "Artifact directory",
    "Started at",
    "Finished at",
    "Duration (s)",
]


@admin.register(ExperimentRun)
class ExperimentRunAdmin(ModelAdmin):
    actions = ["export_runs_csv"]
    list_display = (
        "command",
        "name",
        "short_hash",
        "seed",
        "status",
        "duration",
        "created_at",
    )
    list_filter = ("command", "status", "created_at")
    search_fields = ("name", "config_hash", "artifact_dir")
    ordering = ("-created_at",)
    readonly_fields = (
        "id",
        "command",
        "name",
        "config_hash",
        "seed",
        "status",
        "artifact_dir",
        "manifest",
        "summary",
        "started_at",
        "finished_at",
        "created_at",
    )
    fieldsets = (
        (
            "Run",
            {
                "fields": (
                    ("command", "status"),
                    ("name", "seed"),
                    "config_hash",
                    "artifact_dir",
                ),
            },
        ),
        (
            "Timing",
            {
                "fields": (("started_at", "finished_at"), "created_at"),
            },
        ),
        (
            "Results",
            {
                "fields": ("summary", "manifest"),
            },
        ),
    )

    def has_add_permission(self, request):
        return False

    def short_hash(self, obj):
        return obj.config_hash[:12]

    short_hash.short_description = "Config"

    def duration(self, obj):
        seconds = obj.duration_seconds
        return "" if seconds is None else f"{seconds:.1f}s"

    duration.short_description = "Duration"

    def export_runs_csv(self, request, queryset):
        if not queryset.exists():
            self.message_user(request, "No runs selected.", level=messages.WARNING)
            return None

        response = HttpResponse(content_type="text/csv")
        response["Content-Disposition"] = 'attachment; filename="experiment_runs.csv"'

        writer = csv.writer(response)
        writer.writerow(EXPORT_COLUMNS)
        for run in queryset.order_by("created_at"):
            seconds = run.duration_seconds
            writer.writerow(
                [
                    str(run.id),
                    run.command,
                    run.name,
                    run.config_hash,
                    "" if run.seed is None else run.seed,
                    run.get_status_display(),
                    run.artifact_dir,
                    run.started_at.isoformat() if run.started_at else "",
                    run.finished_at.isoformat() if run.finished_at else "",
                    "" if seconds is None else f"{seconds:.3f}",
                ]
            )
        return response

    export_runs_csv.short_description = "Export selected runs as CSV"
