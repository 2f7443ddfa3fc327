from django.apps import AppConfig


class NestedConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "nested"
    verbose_name = "Nested MDP"
