public class Branches {
    public static int main(String[] args) {
        int n = 7;
        int free = 0;
        if (n % 2 == 0) {
            free = n / 2;
        } else {
            free = n * 3 + 1;
        }
        return free;
    }
}
