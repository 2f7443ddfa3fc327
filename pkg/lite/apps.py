from django.apps import AppConfig


class LiteConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "lite"
    verbose_name = "Belief-space planner"
